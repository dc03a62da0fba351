// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0
//
// Soft differentiable rasterizer. Each stroke's Bézier trajectory is
// flattened to a fixed polyline; a pixel's coverage is a sigmoid of the
// signed distance to that polyline; strokes composite back-to-front with the
// over operator. The whole raster is one fused tape node with an analytic
// backward pass, so the image tensor is differentiable w.r.t. every stroke
// parameter without materializing per-pixel graphs.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "strokesynth/scene.hpp"
#include "strokesynth/tensor.hpp"

namespace strokesynth {

inline constexpr int kDefaultSegments = 32;
inline constexpr float kDefaultSigma = 1.0f;

struct RasterSettings {
    std::int64_t width = kDefaultCanvasSize;
    std::int64_t height = kDefaultCanvasSize;
    std::array<float, 3> background{1.0f, 1.0f, 1.0f};
    float sigma = kDefaultSigma; // soft-edge width in pixels
    int segments = kDefaultSegments;
};

// Polyline point i = B(i/K) for the cubic Bézier through the stroke's control
// points; returns K+1 points.
std::vector<Point2> flatten_bezier(const Stroke& s, int segments);

// sigmoid((radius - d) / sigma) with d the distance from the pixel center to
// the flattened trajectory (nearest segment, ties to the lower index).
float coverage(Point2 pixel_center, const Stroke& s, float sigma, int segments = kDefaultSegments);

// Rasterizes the parameter groups to a (3,H,W) tensor in [0,1]. Pixel (y,x)
// samples at center (x+0.5, y+0.5). If the groups live on a tape the result
// does too, with gradients for trajectories, radii, and colors (alpha is
// colors channel 3).
Tensor rasterize(const ParamGroups& params, const RasterSettings& rs);

// Off-tape convenience for final renders and analysis.
Tensor rasterize(const Drawing& d, float sigma = kDefaultSigma, int segments = kDefaultSegments);

} // namespace strokesynth
