// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include "strokesynth/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "strokesynth/errors.hpp"
#include "strokesynth/parallel.hpp"

namespace strokesynth {

namespace {

constexpr std::int64_t kRowGrain = 4;
// Beyond radius + kCullMargin * sigma the coverage sigmoid is ~2e-9, below
// one ulp of any composited channel, so culled strokes are exact zeros.
constexpr float kCullMargin = 20.0f;

inline float stable_sigmoid(float s) {
    if (s >= 0.0f) {
        return 1.0f / (1.0f + std::exp(-s));
    }
    const float e = std::exp(s);
    return e / (1.0f + e);
}

// Cubic Bézier basis at t.
inline void bezier_basis(float t, float w[4]) {
    const float u = 1.0f - t;
    w[0] = u * u * u;
    w[1] = 3.0f * u * u * t;
    w[2] = 3.0f * u * t * t;
    w[3] = t * t * t;
}

// Precomputed geometry shared by the forward kernel and the backward closure.
struct FlatScene {
    std::int64_t n = 0;
    int segments = 0;
    std::vector<float> pts;    // (K+1) x,y pairs per stroke, stroke-major
    std::vector<float> bbox;   // xmin,xmax,ymin,ymax per stroke, cull-expanded
    std::vector<float> radius; // per stroke
    std::vector<float> rgba;   // 4 per stroke
    std::vector<float> basis;  // 4 basis weights per polyline point
};

FlatScene flatten_scene(const ParamGroups& params, const RasterSettings& rs) {
    FlatScene fs;
    fs.n = params.radii.numel();
    fs.segments = rs.segments;
    const int kp1 = rs.segments + 1;
    fs.basis.resize(static_cast<std::size_t>(kp1) * 4);
    for (int k = 0; k < kp1; ++k) {
        bezier_basis(static_cast<float>(k) / static_cast<float>(rs.segments),
                     fs.basis.data() + static_cast<std::size_t>(k) * 4);
    }
    fs.pts.resize(static_cast<std::size_t>(fs.n * kp1) * 2);
    fs.bbox.resize(static_cast<std::size_t>(fs.n) * 4);
    fs.radius.assign(params.radii.values().begin(), params.radii.values().end());
    fs.rgba.assign(params.colors.values().begin(), params.colors.values().end());

    const float* traj = params.trajectories.values().data();
    for (std::int64_t i = 0; i < fs.n; ++i) {
        const float* cp = traj + i * 8;
        float* out = fs.pts.data() + static_cast<std::size_t>(i * kp1) * 2;
        float xmin = std::numeric_limits<float>::infinity();
        float xmax = -xmin;
        float ymin = xmin;
        float ymax = xmax;
        for (int k = 0; k < kp1; ++k) {
            const float* w = fs.basis.data() + static_cast<std::size_t>(k) * 4;
            const float x = w[0] * cp[0] + w[1] * cp[2] + w[2] * cp[4] + w[3] * cp[6];
            const float y = w[0] * cp[1] + w[1] * cp[3] + w[2] * cp[5] + w[3] * cp[7];
            out[k * 2 + 0] = x;
            out[k * 2 + 1] = y;
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
        const float margin = fs.radius[static_cast<std::size_t>(i)] + kCullMargin * rs.sigma;
        fs.bbox[static_cast<std::size_t>(i * 4 + 0)] = xmin - margin;
        fs.bbox[static_cast<std::size_t>(i * 4 + 1)] = xmax + margin;
        fs.bbox[static_cast<std::size_t>(i * 4 + 2)] = ymin - margin;
        fs.bbox[static_cast<std::size_t>(i * 4 + 3)] = ymax + margin;
    }
    return fs;
}

// Distance from p to the polyline of stroke i; reports the nearest segment,
// its parameter, and the unit direction from the nearest point toward p
// (zero when the pixel sits exactly on the line).
struct NearestHit {
    float dist;
    int seg;
    float t;
    float ex, ey;
};

inline NearestHit nearest_on_polyline(const FlatScene& fs, std::int64_t i, float px, float py) {
    const int kp1 = fs.segments + 1;
    const float* pts = fs.pts.data() + static_cast<std::size_t>(i * kp1) * 2;
    float best2 = std::numeric_limits<float>::infinity();
    int best_seg = 0;
    float best_t = 0.0f;
    float bqx = pts[0];
    float bqy = pts[1];
    for (int m = 0; m < fs.segments; ++m) {
        const float ax = pts[m * 2 + 0];
        const float ay = pts[m * 2 + 1];
        const float dx = pts[m * 2 + 2] - ax;
        const float dy = pts[m * 2 + 3] - ay;
        const float len2 = dx * dx + dy * dy;
        float t = 0.0f;
        if (len2 > 0.0f) {
            t = ((px - ax) * dx + (py - ay) * dy) / len2;
            t = std::clamp(t, 0.0f, 1.0f);
        }
        const float qx = ax + t * dx;
        const float qy = ay + t * dy;
        const float ddx = px - qx;
        const float ddy = py - qy;
        const float d2 = ddx * ddx + ddy * ddy;
        if (d2 < best2) { // strict: ties keep the lower segment index
            best2 = d2;
            best_seg = m;
            best_t = t;
            bqx = qx;
            bqy = qy;
        }
    }
    NearestHit h;
    h.dist = std::sqrt(best2);
    h.seg = best_seg;
    h.t = best_t;
    if (h.dist > 0.0f) {
        h.ex = (px - bqx) / h.dist;
        h.ey = (py - bqy) / h.dist;
    } else {
        h.ex = 0.0f;
        h.ey = 0.0f;
    }
    return h;
}

struct PixelHit {
    std::int32_t stroke;
    std::int32_t seg;
    float c, w, t, ex, ey;
    float pre[3]; // composited color before this stroke
};

} // namespace

std::vector<Point2> flatten_bezier(const Stroke& s, int segments) {
    if (segments < 1) {
        throw DomainError("flatten_bezier: need at least one segment");
    }
    std::vector<Point2> out(static_cast<std::size_t>(segments) + 1);
    for (int k = 0; k <= segments; ++k) {
        float w[4];
        bezier_basis(static_cast<float>(k) / static_cast<float>(segments), w);
        Point2 p;
        p.x = w[0] * s.control[0].x + w[1] * s.control[1].x + w[2] * s.control[2].x +
              w[3] * s.control[3].x;
        p.y = w[0] * s.control[0].y + w[1] * s.control[1].y + w[2] * s.control[2].y +
              w[3] * s.control[3].y;
        out[static_cast<std::size_t>(k)] = p;
    }
    return out;
}

float coverage(Point2 pixel_center, const Stroke& s, float sigma, int segments) {
    if (sigma <= 0.0f) {
        throw DomainError("coverage: sigma must be positive");
    }
    const auto poly = flatten_bezier(s, segments);
    float best2 = std::numeric_limits<float>::infinity();
    for (int m = 0; m < segments; ++m) {
        const float ax = poly[static_cast<std::size_t>(m)].x;
        const float ay = poly[static_cast<std::size_t>(m)].y;
        const float dx = poly[static_cast<std::size_t>(m) + 1].x - ax;
        const float dy = poly[static_cast<std::size_t>(m) + 1].y - ay;
        const float len2 = dx * dx + dy * dy;
        float t = 0.0f;
        if (len2 > 0.0f) {
            t = std::clamp(((pixel_center.x - ax) * dx + (pixel_center.y - ay) * dy) / len2, 0.0f,
                           1.0f);
        }
        const float ddx = pixel_center.x - (ax + t * dx);
        const float ddy = pixel_center.y - (ay + t * dy);
        best2 = std::min(best2, ddx * ddx + ddy * ddy);
    }
    return stable_sigmoid((s.radius - std::sqrt(best2)) / sigma);
}

Tensor rasterize(const ParamGroups& params, const RasterSettings& rs) {
    if (rs.width < 1 || rs.height < 1) {
        throw ShapeError("rasterize: canvas extents must be positive");
    }
    if (rs.sigma <= 0.0f) {
        throw DomainError("rasterize: sigma must be positive");
    }
    if (rs.segments < 1) {
        throw DomainError("rasterize: need at least one segment");
    }
    const std::int64_t n = params.radii.numel();
    if (params.trajectories.shape() != Shape{n, 4, 2} || params.radii.shape() != Shape{n} ||
        params.colors.shape() != Shape{n, 4}) {
        throw ShapeError("rasterize: parameter groups must be (n,4,2), (n,), (n,4)");
    }

    auto fs = std::make_shared<FlatScene>(flatten_scene(params, rs));
    const std::int64_t W = rs.width;
    const std::int64_t H = rs.height;
    const float inv_sigma = 1.0f / rs.sigma;

    Tensor img = Tensor::zeros({3, H, W});
    {
        float* out = img.mutable_values().data();
        parallel_for(H, kRowGrain, [&](std::int64_t rbegin, std::int64_t rend) {
            std::vector<std::int32_t> row_strokes;
            row_strokes.reserve(static_cast<std::size_t>(fs->n));
            for (std::int64_t y = rbegin; y < rend; ++y) {
                const float py = static_cast<float>(y) + 0.5f;
                row_strokes.clear();
                for (std::int64_t i = 0; i < fs->n; ++i) {
                    const float* bb = fs->bbox.data() + i * 4;
                    if (py >= bb[2] && py <= bb[3]) {
                        row_strokes.push_back(static_cast<std::int32_t>(i));
                    }
                }
                for (std::int64_t x = 0; x < W; ++x) {
                    const float px = static_cast<float>(x) + 0.5f;
                    float c0 = rs.background[0];
                    float c1 = rs.background[1];
                    float c2 = rs.background[2];
                    for (const std::int32_t i : row_strokes) {
                        const float* bb = fs->bbox.data() + static_cast<std::int64_t>(i) * 4;
                        if (px < bb[0] || px > bb[1]) {
                            continue;
                        }
                        const NearestHit h = nearest_on_polyline(*fs, i, px, py);
                        const float c = stable_sigmoid(
                            (fs->radius[static_cast<std::size_t>(i)] - h.dist) * inv_sigma);
                        const float* col = fs->rgba.data() + static_cast<std::int64_t>(i) * 4;
                        const float w = col[3] * c;
                        const float uw = 1.0f - w;
                        c0 = uw * c0 + w * col[0];
                        c1 = uw * c1 + w * col[1];
                        c2 = uw * c2 + w * col[2];
                    }
                    const std::int64_t at = y * W + x;
                    out[0 * H * W + at] = c0;
                    out[1 * H * W + at] = c1;
                    out[2 * H * W + at] = c2;
                }
            }
        });
    }

    if (Tape* tape = common_tape({&params.trajectories, &params.radii, &params.colors})) {
        Tensor traj = params.trajectories;
        Tensor radii = params.radii;
        Tensor colors = params.colors;
        std::vector<int> inputs;
        for (const Tensor* t : {&params.trajectories, &params.radii, &params.colors}) {
            if (t->on_tape()) {
                inputs.push_back(t->node());
            }
        }
        const RasterSettings settings = rs;
        tape->record(
            img, std::move(inputs),
            [fs, traj, radii, colors, settings](std::span<const float> g, Tape::BackwardCtx& ctx) {
                const std::int64_t W = settings.width;
                const std::int64_t H = settings.height;
                const std::int64_t n = fs->n;
                const float inv_sigma = 1.0f / settings.sigma;

                // Per-chunk partial buffers, reduced in chunk order below, so
                // gradients are bit-identical for any worker count.
                const std::int64_t chunks = (H + kRowGrain - 1) / kRowGrain;
                const std::int64_t stride = n * 13; // 8 traj + 1 radius + 4 color
                std::vector<float> partial(static_cast<std::size_t>(chunks * stride), 0.0f);

                parallel_for(H, kRowGrain, [&](std::int64_t rbegin, std::int64_t rend) {
                    float* part = partial.data() + (rbegin / kRowGrain) * stride;
                    float* g_traj = part;
                    float* g_radius = part + n * 8;
                    float* g_color = part + n * 9;
                    std::vector<std::int32_t> row_strokes;
                    std::vector<PixelHit> hits;
                    row_strokes.reserve(static_cast<std::size_t>(n));
                    hits.reserve(static_cast<std::size_t>(n));
                    for (std::int64_t y = rbegin; y < rend; ++y) {
                        const float py = static_cast<float>(y) + 0.5f;
                        row_strokes.clear();
                        for (std::int64_t i = 0; i < n; ++i) {
                            const float* bb = fs->bbox.data() + i * 4;
                            if (py >= bb[2] && py <= bb[3]) {
                                row_strokes.push_back(static_cast<std::int32_t>(i));
                            }
                        }
                        for (std::int64_t x = 0; x < W; ++x) {
                            const float px = static_cast<float>(x) + 0.5f;
                            // Replay the composite, keeping per-hit state.
                            hits.clear();
                            float c0 = settings.background[0];
                            float c1 = settings.background[1];
                            float c2 = settings.background[2];
                            for (const std::int32_t i : row_strokes) {
                                const float* bb =
                                    fs->bbox.data() + static_cast<std::int64_t>(i) * 4;
                                if (px < bb[0] || px > bb[1]) {
                                    continue;
                                }
                                const NearestHit h = nearest_on_polyline(*fs, i, px, py);
                                const float c = stable_sigmoid(
                                    (fs->radius[static_cast<std::size_t>(i)] - h.dist) *
                                    inv_sigma);
                                const float* col =
                                    fs->rgba.data() + static_cast<std::int64_t>(i) * 4;
                                PixelHit ph;
                                ph.stroke = i;
                                ph.seg = h.seg;
                                ph.c = c;
                                ph.w = col[3] * c;
                                ph.t = h.t;
                                ph.ex = h.ex;
                                ph.ey = h.ey;
                                ph.pre[0] = c0;
                                ph.pre[1] = c1;
                                ph.pre[2] = c2;
                                hits.push_back(ph);
                                const float uw = 1.0f - ph.w;
                                c0 = uw * c0 + ph.w * col[0];
                                c1 = uw * c1 + ph.w * col[1];
                                c2 = uw * c2 + ph.w * col[2];
                            }
                            if (hits.empty()) {
                                continue;
                            }
                            const std::int64_t at = y * W + x;
                            const float g0 = g[0 * H * W + at];
                            const float g1 = g[1 * H * W + at];
                            const float g2 = g[2 * H * W + at];
                            if (g0 == 0.0f && g1 == 0.0f && g2 == 0.0f) {
                                continue;
                            }
                            // Reverse sweep with suffix transmittance.
                            float T = 1.0f;
                            for (std::size_t hi = hits.size(); hi-- > 0;) {
                                const PixelHit& ph = hits[hi];
                                const std::int64_t i = ph.stroke;
                                const float* col = fs->rgba.data() + i * 4;
                                const float gw =
                                    T * (g0 * (col[0] - ph.pre[0]) + g1 * (col[1] - ph.pre[1]) +
                                         g2 * (col[2] - ph.pre[2]));
                                const float wT = ph.w * T;
                                g_color[i * 4 + 0] += g0 * wT;
                                g_color[i * 4 + 1] += g1 * wT;
                                g_color[i * 4 + 2] += g2 * wT;
                                g_color[i * 4 + 3] += gw * ph.c; // alpha
                                const float gc = gw * col[3];
                                const float dcds = ph.c * (1.0f - ph.c) * inv_sigma;
                                g_radius[i] += gc * dcds;
                                const float gd = -gc * dcds;
                                if (ph.ex != 0.0f || ph.ey != 0.0f) {
                                    // d(dist)/d(segment endpoints), then through
                                    // the Bézier basis to the control points.
                                    const float gax = -gd * (1.0f - ph.t) * ph.ex;
                                    const float gay = -gd * (1.0f - ph.t) * ph.ey;
                                    const float gbx = -gd * ph.t * ph.ex;
                                    const float gby = -gd * ph.t * ph.ey;
                                    const float* wa =
                                        fs->basis.data() + static_cast<std::size_t>(ph.seg) * 4;
                                    const float* wb = wa + 4;
                                    float* gt = g_traj + i * 8;
                                    for (int j = 0; j < 4; ++j) {
                                        gt[j * 2 + 0] += wa[j] * gax + wb[j] * gbx;
                                        gt[j * 2 + 1] += wa[j] * gay + wb[j] * gby;
                                    }
                                }
                                T *= 1.0f - ph.w;
                            }
                        }
                    }
                });

                // Ordered reduction over chunks.
                auto reduce_into = [&](std::span<float> dst, std::int64_t offset,
                                       std::int64_t count) {
                    for (std::int64_t ch = 0; ch < chunks; ++ch) {
                        const float* src = partial.data() + ch * stride + offset;
                        for (std::int64_t k = 0; k < count; ++k) {
                            dst[static_cast<std::size_t>(k)] += src[k];
                        }
                    }
                };
                if (traj.on_tape()) {
                    reduce_into(ctx.grad(traj.node()), 0, n * 8);
                }
                if (radii.on_tape()) {
                    reduce_into(ctx.grad(radii.node()), n * 8, n);
                }
                if (colors.on_tape()) {
                    reduce_into(ctx.grad(colors.node()), n * 9, n * 4);
                }
            });
    }
    return img;
}

Tensor rasterize(const Drawing& d, float sigma, int segments) {
    RasterSettings rs;
    rs.width = d.width;
    rs.height = d.height;
    rs.background = d.background;
    rs.sigma = sigma;
    rs.segments = segments;
    return rasterize(param_groups(d), rs);
}

} // namespace strokesynth
