// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "strokesynth/rng.hpp"
#include "strokesynth/tensor.hpp"

namespace strokesynth {

inline constexpr float kCropScaleMin = 0.7f;
inline constexpr float kCropScaleMax = 0.9f;
inline constexpr float kCornerJitter = 0.25f;
inline constexpr std::int64_t kDefaultAugmentations = 4;
inline constexpr std::int64_t kDefaultAugmentSize = 224;

/// One random view: a square crop combined with a projective corner warp.
/// All quantities live in unit-square coordinates of the source image.
struct AugmentParams {
    float scale = 1.0f;
    float center_x = 0.5f;
    float center_y = 0.5f;
    /// (dx,dy) displacement per corner, order (0,0),(1,0),(0,1),(1,1).
    std::array<float, 8> corner_offsets{};
    std::int64_t out_size = kDefaultAugmentSize;
};

/// Params that reproduce the input when the output size matches.
AugmentParams identity_params(std::int64_t out_size = kDefaultAugmentSize);

/// Draws scale, then center, then the four corner displacements. The crop box
/// always stays inside the unit square; corners jitter within +-kCornerJitter.
AugmentParams sample_params(Pcg32& rng, std::int64_t out_size = kDefaultAugmentSize);

/// Resamples img (C,H,W) through the composed crop + warp homography into
/// (C,out_size,out_size). Differentiable w.r.t. image pixels; the params are
/// constants. Throws DegenerateInputError when the warped corners collapse.
Tensor apply_augmentation(const Tensor& img, const AugmentParams& p);

/// n independent views of img from sequential draws on one rng stream.
std::vector<Tensor> augment_batch(const Tensor& img, std::int64_t n, Pcg32& rng,
                                  std::int64_t out_size = kDefaultAugmentSize);

/// Plain bilinear resize of img (C,H,W) to (C,out_h,out_w).
Tensor resize_bilinear(const Tensor& img, std::int64_t out_h, std::int64_t out_w);

/// Crops (C,H,W) to the centered square of side min(H,W); offsets round down.
Tensor center_crop_square(const Tensor& img);

} // namespace strokesynth
