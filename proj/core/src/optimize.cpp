// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include "strokesynth/optimize.hpp"

#include <chrono>
#include <cmath>
#include <utility>
#include <vector>

#include "strokesynth/augment.hpp"
#include "strokesynth/errors.hpp"

namespace strokesynth {

namespace {

void validate(const RunConfig& c) {
    if (c.lambda_content < 0.0f || c.lambda_style < 0.0f) {
        throw ConfigError("loss weights must be non-negative");
    }
    if (c.lambda_content == 0.0f && c.lambda_style == 0.0f) {
        throw ConfigError("at least one loss weight must be positive");
    }
    if (c.num_strokes < 1) {
        throw ConfigError("num_strokes must be at least 1");
    }
    if (c.canvas_width < 1 || c.canvas_height < 1) {
        throw ConfigError("canvas extents must be positive");
    }
    if (c.schedule.kind != Schedule::kSequential && c.iterations < 1) {
        throw ConfigError("iterations must be at least 1");
    }
    if (c.schedule.kind != Schedule::kConcerted &&
        (c.schedule.block_content < 1 || c.schedule.block_style < 1)) {
        throw ConfigError("schedule blocks must be at least 1");
    }
    if (c.augmentations < 1) {
        throw ConfigError("augmentations must be at least 1");
    }
    if (c.feature_samples < 1 || c.feature_samples > kMaxFeatureLocations) {
        throw ConfigError("feature_samples out of range");
    }
    if (c.sigma <= 0.0f) {
        throw ConfigError("sigma must be positive");
    }
    if (c.segments < 1) {
        throw ConfigError("segments must be at least 1");
    }
    if (c.candidates < 1) {
        throw ConfigError("candidates must be at least 1");
    }
    if (c.lr_trajectories < 0.0f || c.lr_radii < 0.0f || c.lr_colors < 0.0f) {
        throw ConfigError("learning rates must be non-negative");
    }
}

std::vector<float> copy_values(const Tensor& t) {
    return {t.values().begin(), t.values().end()};
}

} // namespace

void rmsprop_step(std::span<float> params, std::span<const float> grads, RmspropState& st) {
    if (params.size() != grads.size() || params.size() != st.v.size()) {
        throw ShapeError("rmsprop_step: parameter, gradient, and state sizes differ");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const float g = grads[i];
        st.v[i] = st.decay * st.v[i] + (1.0f - st.decay) * g * g;
        params[i] -= st.lr * g / (std::sqrt(st.v[i]) + st.epsilon);
    }
}

Phase phase_at(const ScheduleSpec& spec, std::int64_t iter) {
    switch (spec.kind) {
    case Schedule::kConcerted:
        return Phase::kBoth;
    case Schedule::kAlternated:
        return iter % (spec.block_content + spec.block_style) < spec.block_content
                   ? Phase::kContent
                   : Phase::kStyle;
    case Schedule::kSequential:
        return iter < spec.block_content ? Phase::kContent : Phase::kStyle;
    }
    throw ContractError("phase_at: unknown schedule");
}

std::string phase_name(Phase p) {
    switch (p) {
    case Phase::kContent:
        return "content";
    case Phase::kStyle:
        return "style";
    case Phase::kBoth:
        return "both";
    }
    throw ContractError("phase_name: unknown phase");
}

std::int64_t total_iterations(const RunConfig& config) {
    return config.schedule.kind == Schedule::kSequential
               ? config.schedule.block_content + config.schedule.block_style
               : config.iterations;
}

RunResult run(const RunConfig& config, const ImageEncoder& embedder,
              const StyleFeatureExtractor& extractor, const Tensor& text_embedding,
              const Tensor& style_image, const IterationSink& sink) {
    using Clock = std::chrono::steady_clock;
    validate(config);

    const std::int64_t iters = total_iterations(config);
    const LossOptions lopts{config.lambda_content, config.lambda_style, config.augmentations,
                            config.feature_samples};
    const LossComputer lc(embedder, extractor, text_embedding, style_image, lopts);

    RunResult result;
    result.seed = config.seed;
    result.drawing =
        init_random(config.num_strokes, config.canvas_width, config.canvas_height, config.seed);
    result.history.reserve(static_cast<std::size_t>(iters));

    Pcg32 aug_rng(config.seed, 2);
    Pcg32 feat_rng(config.seed, 3);

    const RasterSettings rs{config.canvas_width, config.canvas_height, result.drawing.background,
                            config.sigma, config.segments};

    const ParamGroups sizing = param_groups(result.drawing);
    RmspropState st_traj(static_cast<std::size_t>(sizing.trajectories.numel()),
                         config.lr_trajectories);
    RmspropState st_radii(static_cast<std::size_t>(sizing.radii.numel()), config.lr_radii);
    RmspropState st_colors(static_cast<std::size_t>(sizing.colors.numel()), config.lr_colors);

    for (std::int64_t iter = 0; iter < iters; ++iter) {
        const Phase phase = phase_at(config.schedule, iter);
        const auto start = Clock::now();

        Tape tape;
        const ParamGroups pg = param_groups(result.drawing, &tape);
        const LossTerms terms = lc.evaluate(pg, rs, phase != Phase::kStyle,
                                            phase != Phase::kContent, aug_rng, feat_rng);
        if (terms.combined.defined()) {
            const GradMap grads = tape.backward(terms.combined);
            std::vector<float> traj = copy_values(pg.trajectories);
            std::vector<float> radii = copy_values(pg.radii);
            std::vector<float> colors = copy_values(pg.colors);
            rmsprop_step(traj, grads.grad(pg.trajectories), st_traj);
            rmsprop_step(radii, grads.grad(pg.radii), st_radii);
            rmsprop_step(colors, grads.grad(pg.colors), st_colors);
            set_param_groups(result.drawing, traj, radii, colors);
            result.drawing = clamp(result.drawing);
        }

        const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
        switch (phase) {
        case Phase::kContent:
            result.seconds.content += elapsed;
            break;
        case Phase::kStyle:
            result.seconds.style += elapsed;
            break;
        case Phase::kBoth:
            result.seconds.both += elapsed;
            break;
        }
        result.history.push_back({make_report(terms, lopts), phase});
        if (sink) {
            sink(iter, result.drawing);
        }
    }

    // Final report: the plain raster, embedded without augmentation, plus
    // both loss terms on a stream of their own so every schedule and weight
    // choice yields comparable numbers.
    const Tensor image = rasterize(param_groups(result.drawing), rs);
    const std::int64_t s = embedder.input_size();
    const Tensor sized = (image.shape()[1] == s && image.shape()[2] == s)
                             ? image
                             : resize_bilinear(image, s, s);
    result.final_cosine = cosine_similarity(embedder.embed(sized), text_embedding).values()[0];

    Pcg32 final_rng(config.seed, 4);
    const float fc = lc.content(image, final_rng).values()[0];
    const float fs = lc.style(image, final_rng).values()[0];
    const float weighted_content = config.lambda_content * fc;
    const float weighted_style = config.lambda_style * fs;
    result.final_losses = {fc, fs, weighted_content + weighted_style};
    return result;
}

RunResult best_of_n(const RunConfig& config, const ImageEncoder& embedder,
                    const StyleFeatureExtractor& extractor, const Tensor& text_embedding,
                    const Tensor& style_image, std::int64_t n) {
    if (n < 1) {
        throw ConfigError("candidate count must be at least 1");
    }
    RunResult best;
    bool have = false;
    for (std::int64_t k = 0; k < n; ++k) {
        RunConfig candidate = config;
        candidate.seed = config.seed + static_cast<std::uint64_t>(k);
        RunResult r = run(candidate, embedder, extractor, text_embedding, style_image);
        if (!have || r.final_cosine > best.final_cosine) {
            best = std::move(r);
            have = true;
        }
    }
    return best;
}

} // namespace strokesynth
