// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdint>
#include <vector>

#include <doctest.h>

#include "gradcheck.hpp"
#include "strokesynth/errors.hpp"
#include "strokesynth/parallel.hpp"
#include "strokesynth/raster.hpp"
#include "strokesynth/rng.hpp"
#include "strokesynth/scene.hpp"

using namespace strokesynth;
namespace gc = gradcheck;

namespace {

// A pixel sits on a subgradient fold of the min-distance when the centerline
// passes through it (the |d| kink) or when two materially different polyline
// points are near-tied for nearest (the medial axis). Ties at a shared vertex
// are benign: both segments report the same nearest point and the same slope.
bool on_distance_fold(const Drawing& d, float px, float py, int segments, float margin) {
    for (const Stroke& s : d.strokes) {
        const auto poly = flatten_bezier(s, segments);
        std::vector<float> dist(static_cast<std::size_t>(segments));
        std::vector<float> qx(static_cast<std::size_t>(segments));
        std::vector<float> qy(static_cast<std::size_t>(segments));
        float best = std::numeric_limits<float>::infinity();
        int best_m = 0;
        for (int m = 0; m < segments; ++m) {
            const float ax = poly[static_cast<std::size_t>(m)].x;
            const float ay = poly[static_cast<std::size_t>(m)].y;
            const float dx = poly[static_cast<std::size_t>(m) + 1].x - ax;
            const float dy = poly[static_cast<std::size_t>(m) + 1].y - ay;
            const float len2 = dx * dx + dy * dy;
            float t = 0.0f;
            if (len2 > 0.0f) {
                t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0f, 1.0f);
            }
            const float nx = ax + t * dx;
            const float ny = ay + t * dy;
            const float ddx = px - nx;
            const float ddy = py - ny;
            dist[static_cast<std::size_t>(m)] = std::sqrt(ddx * ddx + ddy * ddy);
            qx[static_cast<std::size_t>(m)] = nx;
            qy[static_cast<std::size_t>(m)] = ny;
            if (dist[static_cast<std::size_t>(m)] < best) {
                best = dist[static_cast<std::size_t>(m)];
                best_m = m;
            }
        }
        if (best < margin) {
            return true;
        }
        for (int m = 0; m < segments; ++m) {
            if (m == best_m || dist[static_cast<std::size_t>(m)] - best >= margin) {
                continue;
            }
            const float sx = qx[static_cast<std::size_t>(m)] - qx[static_cast<std::size_t>(best_m)];
            const float sy = qy[static_cast<std::size_t>(m)] - qy[static_cast<std::size_t>(best_m)];
            if (sx * sx + sy * sy > margin * margin) {
                return true;
            }
        }
    }
    return false;
}

// Probe weights for raster gradient checks: fold pixels are excluded because
// central differences straddle the subgradient there.
std::vector<float> fold_free_weights(const Drawing& d, const RasterSettings& rs, float margin,
                                     std::uint64_t seed) {
    Pcg32 rng(seed);
    std::vector<float> w(static_cast<std::size_t>(3 * rs.height * rs.width));
    for (std::int64_t y = 0; y < rs.height; ++y) {
        for (std::int64_t x = 0; x < rs.width; ++x) {
            const bool fold = on_distance_fold(d, static_cast<float>(x) + 0.5f,
                                               static_cast<float>(y) + 0.5f, rs.segments, margin);
            for (int c = 0; c < 3; ++c) {
                const float r = rng.uniform(-1.0f, 1.0f);
                w[static_cast<std::size_t>(c * rs.height * rs.width + y * rs.width + x)] =
                    fold ? 0.0f : r;
            }
        }
    }
    return w;
}

Drawing random_drawing(std::int64_t n, std::int64_t size, std::uint64_t seed) {
    Drawing d = init_random(n, size, size, seed);
    // Moderate radii and alpha keep the sigmoid out of full saturation so
    // finite differences see signal. Spreading the control polygon away from
    // the initial tight cluster keeps the curve smooth, which keeps the
    // medial-axis fold pixels sparse.
    Pcg32 rng(seed ^ 0xabcdef);
    for (auto& s : d.strokes) {
        for (int j = 1; j < 4; ++j) {
            s.control[j].x = s.control[0].x + 4.0f * (s.control[j].x - s.control[0].x);
            s.control[j].y = s.control[0].y + 4.0f * (s.control[j].y - s.control[0].y);
        }
        s.radius = rng.uniform(2.0f, 4.0f);
        s.color[3] = rng.uniform(0.4f, 0.9f);
    }
    return d;
}

void check_raster_gradients(std::uint64_t seed) {
    const std::int64_t size = 20;
    Drawing d = random_drawing(3, size, seed);
    RasterSettings rs;
    rs.width = rs.height = size;
    ParamGroups g = param_groups(d);

    gc::Options opts;
    opts.h = 0.05f;
    opts.rtol = 1e-2;
    opts.atol = 1e-3;
    opts.custom_weights = fold_free_weights(d, rs, 0.3f, seed * 31 + 1);
    gc::check("rasterize seed " + std::to_string(seed),
              {{g.trajectories.shape(),
                {g.trajectories.values().begin(), g.trajectories.values().end()}},
               {g.radii.shape(), {g.radii.values().begin(), g.radii.values().end()}},
               {g.colors.shape(), {g.colors.values().begin(), g.colors.values().end()}}},
              [rs](Tape& t, std::vector<Tensor>& in) {
                  ParamGroups pg;
                  pg.trajectories = in[0];
                  pg.radii = in[1];
                  pg.colors = in[2];
                  return rasterize(pg, rs);
              },
              opts);
}

} // namespace

TEST_CASE("bezier flattening") {
    Stroke s;
    s.control = {Point2{3, 4}, Point2{3, 4}, Point2{3, 4}, Point2{3, 4}};
    for (const Point2& p : flatten_bezier(s, 8)) {
        CHECK(p.x == 3.0f);
        CHECK(p.y == 4.0f);
    }

    // Equally spaced collinear control points trace the segment P0->P3.
    s.control = {Point2{0, 0}, Point2{1, 2}, Point2{2, 4}, Point2{3, 6}};
    const auto line = flatten_bezier(s, 16);
    for (std::size_t k = 0; k < line.size(); ++k) {
        CHECK(line[k].y == doctest::Approx(2.0f * line[k].x).epsilon(1e-6));
        CHECK(line[k].x >= -1e-6f);
        CHECK(line[k].x <= 3.0f + 1e-6f);
    }
    CHECK(line.front().x == doctest::Approx(0.0f));
    CHECK(line.back().x == doctest::Approx(3.0f));

    s.control = {Point2{0, 0}, Point2{0, 1}, Point2{1, 1}, Point2{1, 0}};
    const auto arc = flatten_bezier(s, 2);
    CHECK(arc[1].x == doctest::Approx(0.5f).epsilon(1e-6));
    CHECK(arc[1].y == doctest::Approx(0.75f).epsilon(1e-6));

    CHECK_THROWS_AS(flatten_bezier(s, 0), DomainError);
}

TEST_CASE("coverage follows the soft distance profile") {
    Stroke s;
    s.control = {Point2{0, 10}, Point2{10, 10}, Point2{20, 10}, Point2{30, 10}};
    s.radius = 2.0f;

    // On the centerline with radius >> sigma: saturated.
    s.radius = 7.0f;
    CHECK(coverage(Point2{15.0f, 10.0f}, s, 1.0f) >= 0.999f);

    // At distance exactly radius: half coverage.
    s.radius = 2.0f;
    CHECK(coverage(Point2{15.0f, 12.0f}, s, 1.0f) == doctest::Approx(0.5f).epsilon(1e-5));

    // Analytic point: distance 4, radius 2, sigma 1 -> sigmoid(-2).
    CHECK(coverage(Point2{15.0f, 14.0f}, s, 1.0f) ==
          doctest::Approx(1.0f / (1.0f + std::exp(2.0f))).epsilon(1e-5));

    CHECK_THROWS_AS(coverage(Point2{0, 0}, s, 0.0f), DomainError);
}

TEST_CASE("empty drawing renders the background exactly") {
    Drawing d;
    d.width = 9;
    d.height = 7;
    d.background = {0.25f, 0.5f, 0.75f};
    const Tensor img = rasterize(d);
    CHECK(img.shape() == Shape{3, 7, 9});
    for (std::int64_t i = 0; i < 63; ++i) {
        CHECK(img.values()[i] == 0.25f);
        CHECK(img.values()[63 + i] == 0.5f);
        CHECK(img.values()[126 + i] == 0.75f);
    }
}

TEST_CASE("an opaque stroke paints its color in its interior") {
    Drawing d;
    d.width = d.height = 32;
    Stroke s;
    s.control = {Point2{4, 16}, Point2{12, 16}, Point2{20, 16}, Point2{28, 16}};
    s.radius = 6.0f;
    s.color = {0.8f, 0.1f, 0.3f, 1.0f};
    d.strokes.push_back(s);
    const Tensor img = rasterize(d);
    // Pixel (16,16) samples at (16.5,16.5), half a pixel off the y=16
    // centerline: coverage is sigmoid(radius - 0.5) and the white background
    // bleeds through the rest.
    const float c = 1.0f / (1.0f + std::exp(-5.5f));
    const std::int64_t at = 16 * 32 + 16;
    CHECK(img.values()[at] == doctest::Approx((1 - c) + c * 0.8f).epsilon(1e-5));
    CHECK(img.values()[1024 + at] == doctest::Approx((1 - c) + c * 0.1f).epsilon(1e-5));
    CHECK(img.values()[2048 + at] == doctest::Approx((1 - c) + c * 0.3f).epsilon(1e-5));

    for (float v : img.values()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("integer translation shifts the rendering identically") {
    const std::int64_t size = 48;
    Drawing d = random_drawing(4, 32, 99);
    d.width = d.height = size;
    // Keep strokes near the middle so both versions stay on canvas.
    Drawing shifted = d;
    const float ox = 7.0f;
    const float oy = 3.0f;
    for (auto& s : shifted.strokes) {
        for (auto& p : s.control) {
            p.x += ox;
            p.y += oy;
        }
    }
    const Tensor a = rasterize(d);
    const Tensor b = rasterize(shifted);
    float worst = 0.0f;
    for (std::int64_t y = 0; y < size - 3; ++y) {
        for (std::int64_t x = 0; x < size - 7; ++x) {
            for (int c = 0; c < 3; ++c) {
                const float va = a.values()[c * size * size + y * size + x];
                const float vb = b.values()[c * size * size + (y + 3) * size + (x + 7)];
                worst = std::max(worst, std::fabs(va - vb));
            }
        }
    }
    CHECK(worst < 1e-5f);
}

TEST_CASE("swapping overlapping opaque strokes only changes the overlap") {
    Drawing d;
    d.width = d.height = 40;
    Stroke a;
    a.control = {Point2{8, 20}, Point2{16, 20}, Point2{24, 20}, Point2{32, 20}};
    a.radius = 5.0f;
    a.color = {1.0f, 0.0f, 0.0f, 1.0f};
    Stroke b;
    b.control = {Point2{20, 8}, Point2{20, 16}, Point2{20, 24}, Point2{20, 32}};
    b.radius = 5.0f;
    b.color = {0.0f, 0.0f, 1.0f, 1.0f};
    d.strokes = {a, b};
    Drawing swapped = d;
    swapped.strokes = {b, a};

    // The two paint orders differ by exactly w_a*w_b*(colB - colA) per pixel,
    // so any pixel that differs by more than 1e-5 must see both strokes with
    // coverage above 1e-5.
    const Tensor img1 = rasterize(d);
    const Tensor img2 = rasterize(swapped);
    std::int64_t differing = 0;
    for (std::int64_t y = 0; y < 40; ++y) {
        for (std::int64_t x = 0; x < 40; ++x) {
            const std::int64_t at = y * 40 + x;
            bool differs = false;
            for (int c = 0; c < 3; ++c) {
                if (std::fabs(img1.values()[c * 1600 + at] - img2.values()[c * 1600 + at]) >
                    1e-5f) {
                    differs = true;
                }
            }
            if (differs) {
                ++differing;
                const Point2 p{static_cast<float>(x) + 0.5f, static_cast<float>(y) + 0.5f};
                CHECK(coverage(p, a, 1.0f) > 1e-5f);
                CHECK(coverage(p, b, 1.0f) > 1e-5f);
            }
        }
    }
    // The overlap itself must actually flip color.
    CHECK(differing > 0);
}

TEST_CASE("raster gradients match finite differences across configurations") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        check_raster_gradients(seed);
    }
}

TEST_CASE("rasterization is invariant to the thread count") {
    Drawing d = random_drawing(8, 40, 5);
    auto run = [&]() {
        Tape tape;
        ParamGroups g = param_groups(d, &tape);
        RasterSettings rs;
        rs.width = rs.height = 40;
        Tensor img = rasterize(g, rs);
        auto grads = tape.backward(ops::reduce_mean(img));
        struct Out {
            std::vector<float> img, gt, gr, gc;
        };
        return Out{{img.values().begin(), img.values().end()},
                   grads.grad(g.trajectories),
                   grads.grad(g.radii),
                   grads.grad(g.colors)};
    };
    set_num_threads(1);
    const auto serial = run();
    set_num_threads(3);
    const auto threaded = run();
    set_num_threads(0);
    CHECK(serial.img == threaded.img);
    CHECK(serial.gt == threaded.gt);
    CHECK(serial.gr == threaded.gr);
    CHECK(serial.gc == threaded.gc);
}

TEST_CASE("rasterize validates its inputs") {
    Drawing d = init_random(2, 16, 16, 1);
    ParamGroups g = param_groups(d);
    RasterSettings rs;
    rs.width = rs.height = 16;
    rs.sigma = 0.0f;
    CHECK_THROWS_AS(rasterize(g, rs), DomainError);
    rs.sigma = 1.0f;
    rs.width = 0;
    CHECK_THROWS_AS(rasterize(g, rs), ShapeError);
    rs.width = 16;
    ParamGroups bad = g;
    bad.radii = Tensor::zeros({3});
    CHECK_THROWS_AS(rasterize(bad, rs), ShapeError);
}
