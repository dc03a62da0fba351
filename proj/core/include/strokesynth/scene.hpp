// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0
//
// The drawing representation: ordered cubic Bézier brush strokes with radius
// and RGBA color, plus parameter grouping for the optimizer.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "strokesynth/tensor.hpp"

namespace strokesynth {

inline constexpr std::int64_t kDefaultNumStrokes = 256;
inline constexpr std::int64_t kDefaultCanvasSize = 224;
inline constexpr float kRadiusMin = 0.5f;
inline constexpr float kRadiusMax = 8.0f;

struct Point2 {
    float x = 0.0f;
    float y = 0.0f;
};

struct Stroke {
    std::array<Point2, 4> control{}; // cubic Bézier P0..P3, canvas pixels
    float radius = 1.0f;             // brush radius in pixels
    std::array<float, 4> color{0.0f, 0.0f, 0.0f, 1.0f}; // r,g,b,a in [0,1]
};

struct Drawing {
    std::int64_t width = kDefaultCanvasSize;
    std::int64_t height = kDefaultCanvasSize;
    std::array<float, 3> background{1.0f, 1.0f, 1.0f};
    std::vector<Stroke> strokes; // painted back-to-front: index 0 is bottom
};

// Random initialization: P0 uniform over the canvas, each later control point
// offset from the previous one by up to ±5% of the canvas extent per axis,
// radius uniform in [kRadiusMin,kRadiusMax], RGB uniform in [0,1], alpha
// uniform in [0.5,1] so fresh strokes are never invisible. Pure function of
// its arguments.
Drawing init_random(std::int64_t num_strokes, std::int64_t width, std::int64_t height,
                    std::uint64_t seed);

// The three optimizer parameter groups, each a flat view of the stroke data:
// trajectories (n,4,2), radii (n,), colors (n,4) with alpha in channel 3.
struct ParamGroups {
    Tensor trajectories;
    Tensor radii;
    Tensor colors;
};

// With a tape, the groups are gradient-requiring leaves; without, plain data.
ParamGroups param_groups(const Drawing& d, Tape* tape = nullptr);

// Writes group values back into the strokes. Together with param_groups this
// round-trips exactly.
void set_param_groups(Drawing& d, std::span<const float> trajectories,
                      std::span<const float> radii, std::span<const float> colors);

Drawing reassemble(const Drawing& proto, const ParamGroups& groups);

// Colors (including alpha) to [0,1] and radius to [radius_min, radius_max];
// control points stay untouched so strokes can re-enter the canvas.
Drawing clamp(const Drawing& d, float radius_min = kRadiusMin, float radius_max = kRadiusMax);

// Native save format:
// {"canvas":[w,h],"background":[r,g,b],"strokes":[{"points":[[x,y]x4],
//  "radius":r,"color":[r,g,b,a]},...]}
std::string drawing_to_json(const Drawing& d);
Drawing drawing_from_json(const std::string& text);

} // namespace strokesynth
