// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include "strokesynth/augment.hpp"

#include <cmath>
#include <cstddef>

#include "strokesynth/errors.hpp"

namespace strokesynth {

namespace {

// Square-to-quad homography, solved in double. Rows map homogeneous (u,v,1)
// to (x,y,w); the sample point is (x/w, y/w). Corners arrive in cyclic order
// (0,0),(1,0),(1,1),(0,1).
struct Homography {
    double m[9];
};

Homography square_to_quad(const double x[4], const double y[4]) {
    const double sx = x[0] - x[1] + x[2] - x[3];
    const double sy = y[0] - y[1] + y[2] - y[3];
    Homography h{};
    h.m[8] = 1.0;
    if (std::fabs(sx) < 1e-12 && std::fabs(sy) < 1e-12) {
        h.m[0] = x[1] - x[0];
        h.m[1] = x[2] - x[1];
        h.m[2] = x[0];
        h.m[3] = y[1] - y[0];
        h.m[4] = y[2] - y[1];
        h.m[5] = y[0];
        h.m[6] = 0.0;
        h.m[7] = 0.0;
        if (std::fabs(h.m[0] * h.m[4] - h.m[1] * h.m[3]) < 1e-12) {
            throw DegenerateInputError("apply_augmentation: corner layout is not invertible");
        }
        return h;
    }
    const double dx1 = x[1] - x[2];
    const double dx2 = x[3] - x[2];
    const double dy1 = y[1] - y[2];
    const double dy2 = y[3] - y[2];
    const double denom = dx1 * dy2 - dy1 * dx2;
    if (std::fabs(denom) < 1e-12) {
        throw DegenerateInputError("apply_augmentation: corner layout is not invertible");
    }
    const double g = (sx * dy2 - sy * dx2) / denom;
    const double k = (dx1 * sy - dy1 * sx) / denom;
    h.m[0] = x[1] - x[0] + g * x[1];
    h.m[1] = x[3] - x[0] + k * x[3];
    h.m[2] = x[0];
    h.m[3] = y[1] - y[0] + g * y[1];
    h.m[4] = y[3] - y[0] + k * y[3];
    h.m[5] = y[0];
    h.m[6] = g;
    h.m[7] = k;
    // A sign change of w across the square means the quad folds over itself.
    for (int cu = 0; cu < 2; ++cu) {
        for (int cv = 0; cv < 2; ++cv) {
            if (g * cu + k * cv + 1.0 < 1e-9) {
                throw DegenerateInputError("apply_augmentation: corner layout folds over");
            }
        }
    }
    return h;
}

Tensor sample_through_grid(const Tensor& img, const std::vector<float>& grid_data,
                           std::int64_t out_h, std::int64_t out_w) {
    const Tensor grid = Tensor::from_data({out_h, out_w, 2}, grid_data);
    return ops::grid_sample_bilinear(img, grid);
}

} // namespace

AugmentParams identity_params(std::int64_t out_size) {
    AugmentParams p;
    p.out_size = out_size;
    return p;
}

AugmentParams sample_params(Pcg32& rng, std::int64_t out_size) {
    AugmentParams p;
    p.out_size = out_size;
    p.scale = rng.uniform(kCropScaleMin, kCropScaleMax);
    const float half = p.scale * 0.5f;
    p.center_x = rng.uniform(half, 1.0f - half);
    p.center_y = rng.uniform(half, 1.0f - half);
    for (int c = 0; c < 4; ++c) {
        p.corner_offsets[static_cast<std::size_t>(c * 2)] =
            rng.uniform(-kCornerJitter, kCornerJitter);
        p.corner_offsets[static_cast<std::size_t>(c * 2 + 1)] =
            rng.uniform(-kCornerJitter, kCornerJitter);
    }
    return p;
}

Tensor apply_augmentation(const Tensor& img, const AugmentParams& p) {
    if (img.shape().size() != 3) {
        throw ShapeError("apply_augmentation: image must be (C,H,W)");
    }
    if (p.out_size < 1) {
        throw ShapeError("apply_augmentation: output size must be positive");
    }
    if (!(p.scale > 0.0f)) {
        throw DomainError("apply_augmentation: crop scale must be positive");
    }

    // Corner storage order is row-major; the solver wants cyclic order.
    const double ux[4] = {0.0, 1.0, 1.0, 0.0};
    const double uy[4] = {0.0, 0.0, 1.0, 1.0};
    const int store[4] = {0, 1, 3, 2};
    double qx[4];
    double qy[4];
    for (int c = 0; c < 4; ++c) {
        const int s = store[c];
        qx[c] = ux[c] + static_cast<double>(p.corner_offsets[static_cast<std::size_t>(s * 2)]);
        qy[c] = uy[c] + static_cast<double>(p.corner_offsets[static_cast<std::size_t>(s * 2 + 1)]);
    }
    const Homography h = square_to_quad(qx, qy);

    const std::int64_t S = p.out_size;
    const double scale = p.scale;
    const double x0 = p.center_x - scale * 0.5;
    const double y0 = p.center_y - scale * 0.5;
    std::vector<float> grid(static_cast<std::size_t>(S * S) * 2);
    for (std::int64_t i = 0; i < S; ++i) {
        const double v = (static_cast<double>(i) + 0.5) / static_cast<double>(S);
        for (std::int64_t j = 0; j < S; ++j) {
            const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(S);
            const double w = h.m[6] * u + h.m[7] * v + h.m[8];
            const double wx = (h.m[0] * u + h.m[1] * v + h.m[2]) / w;
            const double wy = (h.m[3] * u + h.m[4] * v + h.m[5]) / w;
            // Warp lands in crop-box coordinates; the crop places the box
            // inside the unit square, then the grid convention is [-1,1].
            const double gx = 2.0 * (x0 + scale * wx) - 1.0;
            const double gy = 2.0 * (y0 + scale * wy) - 1.0;
            const std::size_t at = static_cast<std::size_t>((i * S + j) * 2);
            grid[at] = static_cast<float>(gx);
            grid[at + 1] = static_cast<float>(gy);
        }
    }
    return sample_through_grid(img, grid, S, S);
}

std::vector<Tensor> augment_batch(const Tensor& img, std::int64_t n, Pcg32& rng,
                                  std::int64_t out_size) {
    if (n < 1) {
        throw ConfigError("augment_batch: need at least one view");
    }
    std::vector<Tensor> views;
    views.reserve(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k) {
        views.push_back(apply_augmentation(img, sample_params(rng, out_size)));
    }
    return views;
}

Tensor resize_bilinear(const Tensor& img, std::int64_t out_h, std::int64_t out_w) {
    if (img.shape().size() != 3) {
        throw ShapeError("resize_bilinear: image must be (C,H,W)");
    }
    if (out_h < 1 || out_w < 1) {
        throw ShapeError("resize_bilinear: output extents must be positive");
    }
    std::vector<float> grid(static_cast<std::size_t>(out_h * out_w) * 2);
    for (std::int64_t i = 0; i < out_h; ++i) {
        const double gy = 2.0 * ((static_cast<double>(i) + 0.5) / static_cast<double>(out_h)) - 1.0;
        for (std::int64_t j = 0; j < out_w; ++j) {
            const double gx =
                2.0 * ((static_cast<double>(j) + 0.5) / static_cast<double>(out_w)) - 1.0;
            const std::size_t at = static_cast<std::size_t>((i * out_w + j) * 2);
            grid[at] = static_cast<float>(gx);
            grid[at + 1] = static_cast<float>(gy);
        }
    }
    return sample_through_grid(img, grid, out_h, out_w);
}

Tensor center_crop_square(const Tensor& img) {
    if (img.shape().size() != 3) {
        throw ShapeError("center_crop_square: image must be (C,H,W)");
    }
    const std::int64_t c = img.shape()[0];
    const std::int64_t h = img.shape()[1];
    const std::int64_t w = img.shape()[2];
    const std::int64_t m = h < w ? h : w;
    const std::int64_t y0 = (h - m) / 2;
    const std::int64_t x0 = (w - m) / 2;
    if (m == h && m == w) {
        return img;
    }
    const std::int64_t starts[] = {0, y0, x0};
    const std::int64_t ends[] = {c, y0 + m, x0 + m};
    const std::int64_t axes[] = {0, 1, 2};
    const std::int64_t steps[] = {1, 1, 1};
    return ops::slice(img, starts, ends, axes, steps);
}

} // namespace strokesynth
