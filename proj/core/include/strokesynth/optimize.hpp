// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0
//
// The optimization loop: RMSProp over the three stroke parameter groups
// (trajectories, radii, colors), with three phase schedules and best-of-N
// candidate selection by final text-image cosine similarity.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "strokesynth/encoder.hpp"
#include "strokesynth/losses.hpp"
#include "strokesynth/raster.hpp"
#include "strokesynth/scene.hpp"
#include "strokesynth/tensor.hpp"

namespace strokesynth {

inline constexpr float kDefaultLrTrajectories = 0.3f;
inline constexpr float kDefaultLrRadii = 0.3f;
inline constexpr float kDefaultLrColors = 0.03f;
inline constexpr float kRmspropDecay = 0.99f;
inline constexpr float kRmspropEpsilon = 1e-8f;
inline constexpr std::int64_t kDefaultIterations = 250;
inline constexpr std::int64_t kDefaultBlock = 50;
inline constexpr std::int64_t kDefaultCandidates = 4;

/// Running squared-gradient average for one parameter group.
struct RmspropState {
    explicit RmspropState(std::size_t size, float learning_rate)
        : v(size, 0.0f), lr(learning_rate) {}
    std::vector<float> v;
    float lr;
    float decay = kRmspropDecay;
    float epsilon = kRmspropEpsilon;
};

/// v <- decay*v + (1-decay)*g^2; p <- p - lr*g/(sqrt(v)+epsilon), elementwise.
/// Throws ShapeError when sizes disagree.
void rmsprop_step(std::span<float> params, std::span<const float> grads, RmspropState& st);

enum class Schedule { kConcerted, kAlternated, kSequential };

/// For kAlternated the blocks repeat until the iteration budget runs out; for
/// kSequential they are the two whole phases and the run length is their sum.
struct ScheduleSpec {
    Schedule kind = Schedule::kConcerted;
    std::int64_t block_content = kDefaultBlock;
    std::int64_t block_style = kDefaultBlock;
};

enum class Phase { kContent, kStyle, kBoth };

/// Which loss terms iteration `iter` of `total` evaluates under `spec`.
Phase phase_at(const ScheduleSpec& spec, std::int64_t iter);

/// Phase name as written to loss histories: "content", "style", or "both".
std::string phase_name(Phase p);

struct RunConfig {
    float lambda_content = kDefaultLambdaContent;
    float lambda_style = kDefaultLambdaStyle;
    std::int64_t num_strokes = kDefaultNumStrokes;
    std::int64_t canvas_width = kDefaultCanvasSize;
    std::int64_t canvas_height = kDefaultCanvasSize;
    /// Ignored for kSequential, where the run length is block_content +
    /// block_style by definition.
    std::int64_t iterations = kDefaultIterations;
    ScheduleSpec schedule;
    std::uint64_t seed = 0;
    std::int64_t augmentations = kDefaultAugmentations;
    std::int64_t feature_samples = kDefaultFeatureSamples;
    float sigma = kDefaultSigma;
    int segments = kDefaultSegments;
    std::int64_t candidates = kDefaultCandidates;
    float lr_trajectories = kDefaultLrTrajectories;
    float lr_radii = kDefaultLrRadii;
    float lr_colors = kDefaultLrColors;
};

/// Total loop length implied by the config (block sum for kSequential).
std::int64_t total_iterations(const RunConfig& config);

/// One history row. Unevaluated terms are NaN; `combined` is NaN whenever it
/// would not equal the full weighted sum.
struct IterationRecord {
    LossReport losses;
    Phase phase;
};

struct PhaseSeconds {
    double content = 0.0;
    double style = 0.0;
    double both = 0.0;
};

struct RunResult {
    Drawing drawing;
    std::vector<IterationRecord> history; // one row per iteration
    PhaseSeconds seconds;
    /// The seed this result was produced from (the winning candidate's under
    /// best_of_n); rerunning with it reproduces the result bit for bit.
    std::uint64_t seed = 0;
    /// Cosine similarity between the embedding of the final raster (resized
    /// to the encoder input, no augmentation) and the text embedding.
    float final_cosine = 0.0f;
    /// Both loss terms evaluated on the final drawing regardless of schedule
    /// or weights, with a dedicated deterministic random stream.
    LossReport final_losses{};
};

/// Observes the drawing after each completed iteration (timelapse export).
using IterationSink = std::function<void(std::int64_t iter, const Drawing&)>;

/// Runs the loop from a random initialization. Randomness is split into fixed
/// streams of `config.seed`: stroke init uses the seed directly, augmentation
/// stream 2, feature sampling stream 3, and the final report stream 4, so
/// results are bit-identical across invocations and thread counts.
/// Throws ConfigError on invalid settings before any work.
RunResult run(const RunConfig& config, const ImageEncoder& embedder,
              const StyleFeatureExtractor& extractor, const Tensor& text_embedding,
              const Tensor& style_image, const IterationSink& sink = {});

/// Runs candidates with seeds config.seed + k for k in [0,n) and returns the
/// one with the highest final_cosine; ties go to the lowest k. n=1 is exactly
/// run().
RunResult best_of_n(const RunConfig& config, const ImageEncoder& embedder,
                    const StyleFeatureExtractor& extractor, const Tensor& text_embedding,
                    const Tensor& style_image, std::int64_t n);

} // namespace strokesynth
