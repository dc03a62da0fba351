// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <doctest.h>

#include "strokesynth/errors.hpp"
#include "strokesynth/scene.hpp"

using namespace strokesynth;

namespace {

bool drawings_equal(const Drawing& a, const Drawing& b) {
    if (a.width != b.width || a.height != b.height || a.background != b.background ||
        a.strokes.size() != b.strokes.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.strokes.size(); ++i) {
        const Stroke& s = a.strokes[i];
        const Stroke& t = b.strokes[i];
        for (int j = 0; j < 4; ++j) {
            if (s.control[j].x != t.control[j].x || s.control[j].y != t.control[j].y) {
                return false;
            }
        }
        if (s.radius != t.radius || s.color != t.color) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("random initialization is a pure function of its inputs") {
    const Drawing a = init_random(1, 128, 128, 7);
    const Drawing b = init_random(1, 128, 128, 7);
    CHECK(drawings_equal(a, b));

    const Drawing c = init_random(64, 128, 128, 7);
    const Drawing d = init_random(64, 128, 128, 8);
    CHECK_FALSE(drawings_equal(c, d));
}

TEST_CASE("random initialization respects its documented distributions") {
    const Drawing d = init_random(200, 160, 96, 3);
    CHECK(d.width == 160);
    CHECK(d.height == 96);
    for (const Stroke& s : d.strokes) {
        CHECK(s.control[0].x >= 0.0f);
        CHECK(s.control[0].x <= 160.0f);
        CHECK(s.control[0].y >= 0.0f);
        CHECK(s.control[0].y <= 96.0f);
        for (int j = 1; j < 4; ++j) {
            // Each point drifts at most 5% of the extent from its predecessor,
            // so point j stays within j*5% of the canvas.
            const float mx = 0.05f * 160.0f * static_cast<float>(j);
            const float my = 0.05f * 96.0f * static_cast<float>(j);
            CHECK(s.control[j].x >= -mx);
            CHECK(s.control[j].x <= 160.0f + mx);
            CHECK(s.control[j].y >= -my);
            CHECK(s.control[j].y <= 96.0f + my);
            CHECK(std::fabs(s.control[j].x - s.control[j - 1].x) <= 0.05f * 160.0f);
            CHECK(std::fabs(s.control[j].y - s.control[j - 1].y) <= 0.05f * 96.0f);
        }
        CHECK(s.radius >= kRadiusMin);
        CHECK(s.radius <= kRadiusMax);
        for (int c = 0; c < 3; ++c) {
            CHECK(s.color[c] >= 0.0f);
            CHECK(s.color[c] <= 1.0f);
        }
        CHECK(s.color[3] >= 0.5f);
        CHECK(s.color[3] <= 1.0f);
    }

    CHECK_THROWS_AS(init_random(0, 128, 128, 1), ConfigError);
    CHECK_THROWS_AS(init_random(8, 0, 128, 1), ConfigError);
}

TEST_CASE("parameter groups round-trip the stroke data") {
    const Drawing d = init_random(64, 128, 128, 11);
    ParamGroups g = param_groups(d);
    CHECK(g.trajectories.shape() == Shape{64, 4, 2});
    CHECK(g.radii.shape() == Shape{64});
    CHECK(g.colors.shape() == Shape{64, 4});

    CHECK(drawings_equal(reassemble(d, g), d));

    // Editing one trajectory element moves exactly that control point.
    g.trajectories.mutable_values()[5 * 8 + 2 * 2 + 1] += 3.0f; // stroke 5, P2.y
    const Drawing moved = reassemble(d, g);
    int changed = 0;
    for (std::size_t i = 0; i < d.strokes.size(); ++i) {
        for (int j = 0; j < 4; ++j) {
            if (moved.strokes[i].control[j].x != d.strokes[i].control[j].x ||
                moved.strokes[i].control[j].y != d.strokes[i].control[j].y) {
                ++changed;
                CHECK(i == 5);
                CHECK(j == 2);
            }
        }
    }
    CHECK(changed == 1);

    // On a tape, the groups are gradient-requiring leaves.
    Tape tape;
    ParamGroups gl = param_groups(d, &tape);
    CHECK(gl.trajectories.on_tape());
    CHECK(gl.radii.on_tape());
    CHECK(gl.colors.on_tape());

    Drawing two = init_random(2, 32, 32, 0);
    const float bad[3] = {0, 0, 0};
    CHECK_THROWS_AS(set_param_groups(two, bad, bad, bad), ShapeError);
}

TEST_CASE("clamp repairs out-of-range values and leaves geometry alone") {
    Drawing d;
    d.width = d.height = 32;
    Stroke s;
    s.control = {Point2{-50.0f, 10.0f}, Point2{0.0f, 0.0f}, Point2{99.0f, 1.0f},
                 Point2{5.0f, 200.0f}};
    s.radius = 0.0f;
    s.color = {1.3f, -0.25f, 0.5f, 2.0f};
    d.strokes.push_back(s);

    Stroke ok;
    ok.control = {Point2{1, 1}, Point2{2, 2}, Point2{3, 3}, Point2{4, 4}};
    ok.radius = 2.0f;
    ok.color = {0.2f, 0.4f, 0.6f, 0.8f};
    d.strokes.push_back(ok);

    const Drawing c = clamp(d);
    CHECK(c.strokes[0].radius == kRadiusMin);
    CHECK(c.strokes[0].color[0] == 1.0f);
    CHECK(c.strokes[0].color[1] == 0.0f);
    CHECK(c.strokes[0].color[2] == 0.5f);
    CHECK(c.strokes[0].color[3] == 1.0f);
    CHECK(c.strokes[0].control[0].x == -50.0f); // geometry untouched
    CHECK(c.strokes[0].control[3].y == 200.0f);

    CHECK(c.strokes[1].radius == 2.0f);
    CHECK(c.strokes[1].color == ok.color);
}

TEST_CASE("drawing JSON serialization round-trips exactly") {
    const Drawing d = init_random(16, 96, 64, 123);
    const std::string text = drawing_to_json(d);
    const Drawing back = drawing_from_json(text);
    CHECK(drawings_equal(d, back));

    // And is stable: serializing the parsed drawing gives the same bytes.
    CHECK(drawing_to_json(back) == text);

    CHECK_THROWS_AS(drawing_from_json("{not json"), ParseError);
    CHECK_THROWS_AS(drawing_from_json("{\"canvas\":[4,4]}"), ParseError);
    CHECK_THROWS_AS(
        drawing_from_json("{\"canvas\":[4,4],\"background\":[1,1,1],"
                          "\"strokes\":[{\"points\":[[0,0]],\"radius\":1,\"color\":[0,0,0,1]}]}"),
        ParseError);
}
