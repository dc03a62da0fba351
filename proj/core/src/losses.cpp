// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include "strokesynth/losses.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "strokesynth/augment.hpp"
#include "strokesynth/errors.hpp"

namespace strokesynth {

namespace {

// Added to a non-negative norm before division. Exact at f32 for any norm a
// feature vector can have, yet keeps zero rows at zero instead of NaN.
constexpr float kNormFloor = 1e-12f;

// Rows scaled to unit length; zero rows stay zero, so their dot product with
// anything is 0 (cosine-0 convention for degenerate features).
Tensor normalize_rows(const Tensor& m) {
    Tensor norm = ops::sqrt(ops::reduce_sum(ops::mul(m, m), {1}, /*keepdims=*/true));
    return ops::div(m, ops::add(norm, kNormFloor));
}

} // namespace

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 1 || b.shape().size() != 1 || a.shape() != b.shape()) {
        throw ShapeError("cosine_similarity: expected equal-length 1-D tensors");
    }
    double na = 0.0;
    double nb = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        na += static_cast<double>(a.values()[k]) * a.values()[k];
        nb += static_cast<double>(b.values()[k]) * b.values()[k];
    }
    if (na < 1e-20 || nb < 1e-20) {
        throw DegenerateInputError("cosine_similarity: zero-norm vector");
    }
    const Tensor dot = ops::reduce_sum(ops::mul(a, b));
    const Tensor norms = ops::mul(ops::sqrt(ops::reduce_sum(ops::mul(a, a))),
                                  ops::sqrt(ops::reduce_sum(ops::mul(b, b))));
    return ops::div(dot, norms);
}

Tensor relaxed_emd(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2) {
        throw ShapeError("relaxed_emd: expected 2-D feature matrices");
    }
    if (a.shape()[1] != b.shape()[1]) {
        throw ShapeError("relaxed_emd: feature dimensions differ");
    }
    if (a.shape()[0] < 1 || b.shape()[0] < 1) {
        throw ShapeError("relaxed_emd: empty feature set");
    }
    const Tensor cos = ops::matmul(normalize_rows(a), ops::transpose(normalize_rows(b), {1, 0}));
    // relu repairs f32 rounding that could push 1 - cos a hair below zero.
    const Tensor cost = ops::relu(ops::add(ops::mul(cos, -1.0f), 1.0f));
    const Tensor a_to_b = ops::reduce_mean(ops::reduce_min(cost, 1));
    const Tensor b_to_a = ops::reduce_mean(ops::reduce_min(cost, 0));
    return ops::maximum(a_to_b, b_to_a);
}

LossReport make_report(const LossTerms& terms, const LossOptions& opts) {
    constexpr float kNan = std::numeric_limits<float>::quiet_NaN();
    LossReport r{kNan, kNan, kNan};
    if (terms.content.defined()) {
        r.content = terms.content.values()[0];
    }
    if (terms.style.defined()) {
        r.style = terms.style.values()[0];
    }
    const bool content_covered = terms.content.defined() || opts.lambda_content == 0.0f;
    const bool style_covered = terms.style.defined() || opts.lambda_style == 0.0f;
    if (terms.combined.defined() && content_covered && style_covered) {
        r.combined = terms.combined.values()[0];
    }
    return r;
}

LossComputer::LossComputer(const ImageEncoder& embedder, const StyleFeatureExtractor& extractor,
                           Tensor text_embedding, const Tensor& style_image, LossOptions opts)
    : embedder_(&embedder), extractor_(&extractor), text_(std::move(text_embedding)),
      opts_(opts) {
    if (opts_.lambda_content < 0.0f || opts_.lambda_style < 0.0f) {
        throw ConfigError("loss weights must be non-negative");
    }
    if (opts_.lambda_content == 0.0f && opts_.lambda_style == 0.0f) {
        throw ConfigError("at least one loss weight must be positive");
    }
    if (opts_.augmentations < 1) {
        throw ConfigError("augmentations must be at least 1");
    }
    if (opts_.feature_samples < 1 || opts_.feature_samples > kMaxFeatureLocations) {
        throw ConfigError("feature_samples out of range [1, " +
                          std::to_string(kMaxFeatureLocations) + "]");
    }
    if (text_.shape() != Shape{embedder_->embed_dim()}) {
        throw ConfigError("text embedding length does not match the encoder dimension");
    }
    if (style_image.shape().size() != 3 || style_image.shape()[0] != 3) {
        throw ShapeError("style image must be (3,H,W)");
    }
    const std::int64_t s = extractor_->input_size();
    const Tensor sized = (style_image.shape()[1] == s && style_image.shape()[2] == s)
                             ? style_image
                             : resize_bilinear(style_image, s, s);
    style_taps_ = extractor_->taps(sized);
}

Tensor LossComputer::content(const Tensor& image, Pcg32& aug_rng) const {
    const auto views = augment_batch(image, opts_.augmentations, aug_rng, embedder_->input_size());
    Tensor sum;
    for (const Tensor& view : views) {
        const Tensor sim = cosine_similarity(embedder_->embed(view), text_);
        sum = sum.defined() ? ops::add(sum, sim) : sim;
    }
    return ops::mul(sum, -1.0f / static_cast<float>(opts_.augmentations));
}

Tensor LossComputer::style(const Tensor& image, Pcg32& feat_rng) const {
    const std::int64_t s = extractor_->input_size();
    const Tensor sized = (image.shape().size() == 3 && image.shape()[1] == s &&
                          image.shape()[2] == s)
                             ? image
                             : resize_bilinear(image, s, s);
    const auto drawing_taps = extractor_->taps(sized);
    if (drawing_taps.size() != style_taps_.size()) {
        throw ContractError("extractor returned a different tap layout than at construction");
    }
    // One shared location set per layer: drawn from the constant style
    // features, then the drawing features are gathered at the same spots.
    const FeatureSet style_f = sample_features(style_taps_, opts_.feature_samples, feat_rng);
    const FeatureSet drawing_f = gather_features(drawing_taps, style_f);
    Tensor total;
    for (std::size_t i = 0; i < style_f.layers.size(); ++i) {
        const Tensor term =
            relaxed_emd(drawing_f.layers[i].features, style_f.layers[i].features);
        total = total.defined() ? ops::add(total, term) : term;
    }
    return total;
}

LossTerms LossComputer::evaluate(const ParamGroups& params, const RasterSettings& rs,
                                 bool want_content, bool want_style, Pcg32& aug_rng,
                                 Pcg32& feat_rng) const {
    want_content = want_content && opts_.lambda_content > 0.0f;
    want_style = want_style && opts_.lambda_style > 0.0f;
    LossTerms terms;
    if (!want_content && !want_style) {
        return terms;
    }
    const Tensor image = rasterize(params, rs);
    if (want_content) {
        terms.content = content(image, aug_rng);
    }
    if (want_style) {
        terms.style = style(image, feat_rng);
    }
    if (terms.content.defined() && terms.style.defined()) {
        terms.combined = ops::add(ops::mul(terms.content, opts_.lambda_content),
                                  ops::mul(terms.style, opts_.lambda_style));
    } else if (terms.content.defined()) {
        terms.combined = ops::mul(terms.content, opts_.lambda_content);
    } else {
        terms.combined = ops::mul(terms.style, opts_.lambda_style);
    }
    return terms;
}

} // namespace strokesynth
