// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0
//
// The optimization objective: a content term (negative mean cosine between
// augmented-drawing embeddings and a text embedding), a style term (sum of
// per-layer relaxed earth-mover distances between drawing and style-image
// features), and their weighted combination. All terms are scalars on the
// caller's tape so one backward pass reaches every stroke parameter.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "strokesynth/augment.hpp"
#include "strokesynth/encoder.hpp"
#include "strokesynth/raster.hpp"
#include "strokesynth/rng.hpp"
#include "strokesynth/scene.hpp"
#include "strokesynth/tensor.hpp"

namespace strokesynth {

inline constexpr float kDefaultLambdaContent = 1.0f;
inline constexpr float kDefaultLambdaStyle = 1.0f;
inline constexpr std::int64_t kDefaultFeatureSamples = kMaxFeatureLocations;

/// a·b / (‖a‖‖b‖) for 1-D tensors, a scalar on the inputs' tape, in [-1,1].
/// Throws ShapeError on dimension mismatch and DegenerateInputError when
/// either vector has (near-)zero norm.
Tensor cosine_similarity(const Tensor& a, const Tensor& b);

/// Relaxed earth-mover distance between feature rows a (M,C) and b (N,C):
/// the cost matrix is the cosine distance c_ij = 1 - cos(a_i, b_j), and the
/// result is max(mean_i min_j c_ij, mean_j min_i c_ij), a scalar on the tape.
/// Zero-norm rows count as cosine 0 (cost 1) against everything.
Tensor relaxed_emd(const Tensor& a, const Tensor& b);

struct LossOptions {
    float lambda_content = kDefaultLambdaContent;
    float lambda_style = kDefaultLambdaStyle;
    std::int64_t augmentations = kDefaultAugmentations;
    std::int64_t feature_samples = kDefaultFeatureSamples;
};

/// Loss terms from one evaluation. A term is defined only when it was
/// requested; `combined` is the weighted sum of the defined terms and is the
/// tensor to run backward from.
struct LossTerms {
    Tensor content;
    Tensor style;
    Tensor combined;
};

/// Plain-number snapshot of an evaluation. NaN marks a term that was not
/// evaluated. `combined` is set only when it equals the full weighted sum
/// (every skipped term carried zero weight); it is NaN otherwise.
struct LossReport {
    float content;
    float style;
    float combined;
};

LossReport make_report(const LossTerms& terms, const LossOptions& opts);

/// Evaluates the objective against one text embedding and one style image.
/// The style image's feature taps are constant across an optimization run, so
/// they are extracted once at construction and sampled off-tape thereafter.
class LossComputer {
public:
    /// `embedder` and `extractor` must outlive the computer (they are usually
    /// the same encoder object). `style_image` is (3,H,W) in [0,1] and is
    /// bilinearly resized to the extractor's input size if it differs.
    /// Throws ConfigError on negative weights, both weights zero, a text
    /// embedding whose length differs from the embedder dimension, or
    /// augmentation/sample counts out of range.
    LossComputer(const ImageEncoder& embedder, const StyleFeatureExtractor& extractor,
                 Tensor text_embedding, const Tensor& style_image, LossOptions opts = {});

    /// Negative mean cosine similarity between the embeddings of `augmentations`
    /// random views of `image` and the text embedding. Scalar on the tape.
    Tensor content(const Tensor& image, Pcg32& aug_rng) const;

    /// Resizes `image` to the extractor input, samples `feature_samples`
    /// shared locations per tap layer, and sums the per-layer relaxed EMD
    /// between drawing and style features. Scalar on the tape.
    Tensor style(const Tensor& image, Pcg32& feat_rng) const;

    /// Rasterizes once and evaluates the requested terms on that image. A
    /// term with zero weight is never evaluated. When nothing remains the
    /// result has no defined members.
    LossTerms evaluate(const ParamGroups& params, const RasterSettings& rs, bool want_content,
                       bool want_style, Pcg32& aug_rng, Pcg32& feat_rng) const;

    const LossOptions& options() const { return opts_; }

private:
    const ImageEncoder* embedder_;
    const StyleFeatureExtractor* extractor_;
    Tensor text_;
    std::vector<std::pair<std::string, Tensor>> style_taps_; // off-tape constants
    LossOptions opts_;
};

} // namespace strokesynth
