// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include "strokesynth/scene.hpp"

#include <algorithm>
#include <utility>

#include <json.hpp>

#include "strokesynth/errors.hpp"
#include "strokesynth/rng.hpp"

namespace strokesynth {

namespace {

// JSON with insertion-ordered keys and f32 numbers, so serialized drawings
// are byte-stable and round-trip exactly.
using fjson = nlohmann::basic_json<nlohmann::ordered_map, std::vector, std::string, bool,
                                   std::int64_t, std::uint64_t, float>;

} // namespace

Drawing init_random(std::int64_t num_strokes, std::int64_t width, std::int64_t height,
                    std::uint64_t seed) {
    if (num_strokes < 1) {
        throw ConfigError("init_random: need at least one stroke");
    }
    if (width < 1 || height < 1) {
        throw ConfigError("init_random: canvas extents must be positive");
    }
    // Stream 1 is reserved for initialization; the optimizer uses other
    // streams of the same seed for augmentation and feature sampling.
    Pcg32 rng(seed, 1);
    Drawing d;
    d.width = width;
    d.height = height;
    d.strokes.resize(static_cast<std::size_t>(num_strokes));
    const float wf = static_cast<float>(width);
    const float hf = static_cast<float>(height);
    for (auto& s : d.strokes) {
        s.control[0].x = rng.uniform(0.0f, wf);
        s.control[0].y = rng.uniform(0.0f, hf);
        for (int j = 1; j < 4; ++j) {
            s.control[j].x = s.control[j - 1].x + rng.uniform(-0.05f * wf, 0.05f * wf);
            s.control[j].y = s.control[j - 1].y + rng.uniform(-0.05f * hf, 0.05f * hf);
        }
        s.radius = rng.uniform(kRadiusMin, kRadiusMax);
        for (int c = 0; c < 3; ++c) {
            s.color[c] = rng.uniform(0.0f, 1.0f);
        }
        s.color[3] = rng.uniform(0.5f, 1.0f);
    }
    return d;
}

ParamGroups param_groups(const Drawing& d, Tape* tape) {
    const std::int64_t n = static_cast<std::int64_t>(d.strokes.size());
    std::vector<float> traj(static_cast<std::size_t>(n) * 8);
    std::vector<float> radii(static_cast<std::size_t>(n));
    std::vector<float> colors(static_cast<std::size_t>(n) * 4);
    for (std::int64_t i = 0; i < n; ++i) {
        const Stroke& s = d.strokes[static_cast<std::size_t>(i)];
        for (int j = 0; j < 4; ++j) {
            traj[static_cast<std::size_t>(i * 8 + j * 2 + 0)] = s.control[j].x;
            traj[static_cast<std::size_t>(i * 8 + j * 2 + 1)] = s.control[j].y;
        }
        radii[static_cast<std::size_t>(i)] = s.radius;
        for (int c = 0; c < 4; ++c) {
            colors[static_cast<std::size_t>(i * 4 + c)] = s.color[c];
        }
    }
    ParamGroups g;
    if (tape != nullptr) {
        g.trajectories = tape->leaf({n, 4, 2}, std::move(traj));
        g.radii = tape->leaf({n}, std::move(radii));
        g.colors = tape->leaf({n, 4}, std::move(colors));
    } else {
        g.trajectories = Tensor::from_data({n, 4, 2}, std::move(traj));
        g.radii = Tensor::from_data({n}, std::move(radii));
        g.colors = Tensor::from_data({n, 4}, std::move(colors));
    }
    return g;
}

void set_param_groups(Drawing& d, std::span<const float> trajectories,
                      std::span<const float> radii, std::span<const float> colors) {
    const std::size_t n = d.strokes.size();
    if (trajectories.size() != n * 8 || radii.size() != n || colors.size() != n * 4) {
        throw ShapeError("set_param_groups: group sizes do not match the stroke count");
    }
    for (std::size_t i = 0; i < n; ++i) {
        Stroke& s = d.strokes[i];
        for (int j = 0; j < 4; ++j) {
            s.control[j].x = trajectories[i * 8 + static_cast<std::size_t>(j) * 2 + 0];
            s.control[j].y = trajectories[i * 8 + static_cast<std::size_t>(j) * 2 + 1];
        }
        s.radius = radii[i];
        for (int c = 0; c < 4; ++c) {
            s.color[c] = colors[i * 4 + static_cast<std::size_t>(c)];
        }
    }
}

Drawing reassemble(const Drawing& proto, const ParamGroups& groups) {
    Drawing d = proto;
    set_param_groups(d, groups.trajectories.values(), groups.radii.values(),
                     groups.colors.values());
    return d;
}

Drawing clamp(const Drawing& d, float radius_min, float radius_max) {
    Drawing out = d;
    for (auto& s : out.strokes) {
        s.radius = std::clamp(s.radius, radius_min, radius_max);
        for (auto& c : s.color) {
            c = std::clamp(c, 0.0f, 1.0f);
        }
    }
    return out;
}

std::string drawing_to_json(const Drawing& d) {
    fjson doc;
    doc["canvas"] = {d.width, d.height};
    doc["background"] = {d.background[0], d.background[1], d.background[2]};
    fjson strokes = fjson::array();
    for (const Stroke& s : d.strokes) {
        fjson js;
        fjson points = fjson::array();
        for (const Point2& p : s.control) {
            points.push_back({p.x, p.y});
        }
        js["points"] = std::move(points);
        js["radius"] = s.radius;
        js["color"] = {s.color[0], s.color[1], s.color[2], s.color[3]};
        strokes.push_back(std::move(js));
    }
    doc["strokes"] = std::move(strokes);
    return doc.dump(2) + "\n";
}

Drawing drawing_from_json(const std::string& text) {
    fjson doc;
    try {
        doc = fjson::parse(text);
    } catch (const fjson::parse_error& e) {
        throw ParseError(std::string("drawing JSON: ") + e.what());
    }
    try {
        Drawing d;
        d.width = doc.at("canvas").at(0).get<std::int64_t>();
        d.height = doc.at("canvas").at(1).get<std::int64_t>();
        if (d.width < 1 || d.height < 1) {
            throw ParseError("drawing JSON: non-positive canvas");
        }
        const auto& bg = doc.at("background");
        for (int c = 0; c < 3; ++c) {
            d.background[static_cast<std::size_t>(c)] = bg.at(static_cast<std::size_t>(c)).get<float>();
        }
        for (const auto& js : doc.at("strokes")) {
            Stroke s;
            const auto& points = js.at("points");
            if (points.size() != 4) {
                throw ParseError("drawing JSON: stroke needs exactly 4 control points");
            }
            for (std::size_t j = 0; j < 4; ++j) {
                s.control[j].x = points.at(j).at(0).get<float>();
                s.control[j].y = points.at(j).at(1).get<float>();
            }
            s.radius = js.at("radius").get<float>();
            const auto& color = js.at("color");
            for (std::size_t c = 0; c < 4; ++c) {
                s.color[c] = color.at(c).get<float>();
            }
            d.strokes.push_back(s);
        }
        return d;
    } catch (const fjson::exception& e) {
        throw ParseError(std::string("drawing JSON: ") + e.what());
    }
}

} // namespace strokesynth
