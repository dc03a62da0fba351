// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "gradcheck.hpp"
#include "strokesynth/augment.hpp"
#include "strokesynth/encoder.hpp"
#include "strokesynth/errors.hpp"
#include "strokesynth/losses.hpp"
#include "strokesynth/raster.hpp"
#include "strokesynth/rng.hpp"
#include "strokesynth/scene.hpp"

using namespace strokesynth;
namespace gc = gradcheck;

namespace {

Tensor rows(Shape shape, std::vector<float> v) { return Tensor::from_data(std::move(shape), std::move(v)); }

float scalar_value(const Tensor& t) { return t.values()[0]; }

// Returns an embedding-sized constant regardless of the image; lets the
// content term be evaluated against a known cosine.
class StubEncoder final : public ImageEncoder {
public:
    StubEncoder(Tensor out, std::int64_t size) : out_(std::move(out)), size_(size) {}
    std::int64_t input_size() const override { return size_; }
    std::int64_t embed_dim() const override { return out_.numel(); }
    Tensor embed(const Tensor&) const override { return out_; }

private:
    Tensor out_;
    std::int64_t size_;
};

class StubExtractor final : public StyleFeatureExtractor {
public:
    StubExtractor(Tensor map, std::int64_t size) : map_(std::move(map)), size_(size) {}
    std::int64_t input_size() const override { return size_; }
    std::vector<std::pair<std::string, Tensor>> taps(const Tensor&) const override {
        return {{"map", map_}};
    }

private:
    Tensor map_;
    std::int64_t size_;
};

Tensor random_image(std::int64_t size, std::uint64_t seed) {
    Pcg32 rng(seed);
    std::vector<float> v(static_cast<std::size_t>(3 * size * size));
    for (auto& x : v) {
        x = rng.uniform(0.0f, 1.0f);
    }
    return Tensor::from_data({3, size, size}, std::move(v));
}

// Strokes with control polygons long enough that the soft disks do not
// collapse to near-zero-length blobs (which sit on distance-field folds).
Drawing spread_drawing(std::int64_t canvas, std::int64_t n, std::uint64_t seed) {
    Drawing d = init_random(n, canvas, canvas, seed);
    for (auto& s : d.strokes) {
        for (int j = 1; j < 4; ++j) {
            s.control[static_cast<std::size_t>(j)].x =
                s.control[0].x + 4.0f * (s.control[static_cast<std::size_t>(j)].x - s.control[0].x);
            s.control[static_cast<std::size_t>(j)].y =
                s.control[0].y + 4.0f * (s.control[static_cast<std::size_t>(j)].y - s.control[0].y);
        }
        s.radius = 2.5f;
        s.color[3] = 0.8f;
    }
    return d;
}

} // namespace

TEST_CASE("cosine similarity hits the analytic anchor values") {
    const Tensor a = rows({2}, {1.0f, 0.0f});
    const Tensor b = rows({2}, {0.0f, 1.0f});
    const Tensor c = rows({2}, {-1.0f, 0.0f});
    const Tensor d = rows({2}, {3.0f, 4.0f});
    CHECK(scalar_value(cosine_similarity(a, a)) == doctest::Approx(1.0f).epsilon(1e-6));
    CHECK(scalar_value(cosine_similarity(a, b)) == doctest::Approx(0.0f).epsilon(1e-6));
    CHECK(scalar_value(cosine_similarity(a, c)) == doctest::Approx(-1.0f).epsilon(1e-6));
    CHECK(scalar_value(cosine_similarity(d, d)) == doctest::Approx(1.0f).epsilon(1e-6));
    CHECK(std::fabs(scalar_value(cosine_similarity(d, a)) - 0.6f) < 1e-6f);

    CHECK_THROWS_AS(cosine_similarity(a, rows({3}, {1, 0, 0})), ShapeError);
    CHECK_THROWS_AS(cosine_similarity(rows({2, 1}, {1, 0}), rows({2, 1}, {1, 0})), ShapeError);
    CHECK_THROWS_AS(cosine_similarity(a, rows({2}, {0.0f, 0.0f})), DegenerateInputError);
    CHECK_THROWS_AS(cosine_similarity(rows({2}, {0.0f, 0.0f}), a), DegenerateInputError);
}

TEST_CASE("cosine similarity gradients match finite differences") {
    gc::check("cosine",
              {{Shape{6}, gc::random_data(6, -1.0f, 1.0f, 11)},
               {Shape{6}, gc::random_data(6, -1.0f, 1.0f, 12)}},
              [](Tape&, std::vector<Tensor>& in) { return cosine_similarity(in[0], in[1]); });
}

TEST_CASE("feature-set distance matches hand-computed cases exactly") {
    const Tensor ex = rows({1, 2}, {1.0f, 0.0f});
    const Tensor ey = rows({1, 2}, {0.0f, 1.0f});
    const Tensor both = rows({2, 2}, {1.0f, 0.0f, 0.0f, 1.0f});

    CHECK(std::fabs(scalar_value(relaxed_emd(ex, ey)) - 1.0f) < 1e-6f);
    // Directed costs: ex,ey -> one matched (0), one unmatched (1) -> mean 0.5;
    // reverse direction matches everything -> 0. Maximum is 0.5.
    CHECK(std::fabs(scalar_value(relaxed_emd(both, ex)) - 0.5f) < 1e-6f);
    CHECK(std::fabs(scalar_value(relaxed_emd(ex, both)) - 0.5f) < 1e-6f);

    Pcg32 rng(31);
    std::vector<float> v(7 * 5);
    for (auto& x : v) {
        x = rng.uniform(-2.0f, 2.0f);
    }
    const Tensor any = rows({7, 5}, v);
    CHECK(std::fabs(scalar_value(relaxed_emd(any, any))) < 1e-6f);
}

TEST_CASE("feature-set distance is symmetric, non-negative, and invariant") {
    Pcg32 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::int64_t m = 1 + static_cast<std::int64_t>(rng.next_below(6));
        const std::int64_t n = 1 + static_cast<std::int64_t>(rng.next_below(6));
        const std::int64_t c = 2 + static_cast<std::int64_t>(rng.next_below(4));
        std::vector<float> va(static_cast<std::size_t>(m * c));
        std::vector<float> vb(static_cast<std::size_t>(n * c));
        for (auto& x : va) {
            x = rng.uniform(-1.0f, 1.0f);
        }
        for (auto& x : vb) {
            x = rng.uniform(-1.0f, 1.0f);
        }
        const Tensor a = rows({m, c}, va);
        const Tensor b = rows({n, c}, vb);
        const float ab = scalar_value(relaxed_emd(a, b));
        CHECK(ab >= 0.0f);
        CHECK(std::fabs(ab - scalar_value(relaxed_emd(b, a))) < 1e-6f);

        // Row permutation of one side.
        std::vector<std::int64_t> perm(static_cast<std::size_t>(m));
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = perm.size(); i > 1; --i) {
            std::swap(perm[i - 1], perm[rng.next_below(static_cast<std::uint32_t>(i))]);
        }
        std::vector<float> vp(va.size());
        for (std::int64_t r = 0; r < m; ++r) {
            for (std::int64_t k = 0; k < c; ++k) {
                vp[static_cast<std::size_t>(r * c + k)] =
                    va[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)] * c + k)];
            }
        }
        CHECK(std::fabs(scalar_value(relaxed_emd(rows({m, c}, vp), b)) - ab) < 1e-6f);

        // Positive per-row rescaling leaves cosine costs unchanged.
        std::vector<float> vs(va.size());
        for (std::int64_t r = 0; r < m; ++r) {
            const float f = rng.uniform(0.25f, 4.0f);
            for (std::int64_t k = 0; k < c; ++k) {
                vs[static_cast<std::size_t>(r * c + k)] = f * va[static_cast<std::size_t>(r * c + k)];
            }
        }
        CHECK(std::fabs(scalar_value(relaxed_emd(rows({m, c}, vs), b)) - ab) < 2e-6f);
    }
}

TEST_CASE("zero-norm feature rows cost 1 against everything") {
    const Tensor withzero = rows({2, 2}, {0.0f, 0.0f, 1.0f, 0.0f});
    const Tensor target = rows({1, 2}, {1.0f, 0.0f});
    // Zero row -> cost 1, matched row -> 0; directed means 0.5 and 0.
    CHECK(std::fabs(scalar_value(relaxed_emd(withzero, target)) - 0.5f) < 1e-6f);

    CHECK_THROWS_AS(relaxed_emd(rows({2}, {1, 0}), target), ShapeError);
    CHECK_THROWS_AS(relaxed_emd(rows({1, 3}, {1, 0, 0}), target), ShapeError);
}

TEST_CASE("feature-set distance gradients match finite differences") {
    gc::check("relaxed_emd",
              {{Shape{4, 3}, gc::random_data(12, -1.0f, 1.0f, 21)},
               {Shape{5, 3}, gc::random_data(15, -1.0f, 1.0f, 22)}},
              [](Tape&, std::vector<Tensor>& in) { return relaxed_emd(in[0], in[1]); });
}

TEST_CASE("content term is -1 against a matching stub and 0 against orthogonal") {
    const Tensor text = rows({4}, {0.5f, -0.5f, 0.5f, -0.5f});
    const Tensor ortho = rows({4}, {0.5f, 0.5f, 0.5f, 0.5f});
    const Tensor map = random_image(4, 2); // (3,4,4) doubles as a tap map
    const Tensor style_img = random_image(16, 3);
    const Tensor image = random_image(24, 4);
    Pcg32 rng(7);

    const StubExtractor extractor(map, 16);
    {
        const StubEncoder enc(text, 16);
        const LossComputer lc(enc, extractor, text, style_img);
        CHECK(std::fabs(scalar_value(lc.content(image, rng)) - (-1.0f)) < 1e-6f);
    }
    {
        const StubEncoder enc(ortho, 16);
        const LossComputer lc(enc, extractor, text, style_img);
        CHECK(std::fabs(scalar_value(lc.content(image, rng))) < 1e-6f);
    }
}

TEST_CASE("style term vanishes when the drawing equals the style image") {
    const ToyEncoder enc(3, 16);
    const Tensor image = random_image(16, 9);
    const LossComputer lc(enc, enc, rows({64}, gc::random_data(64, -1.0f, 1.0f, 1)), image,
                          {1.0f, 1.0f, 2, 16});
    Pcg32 rng(5);
    CHECK(std::fabs(scalar_value(lc.style(image, rng))) < 1e-5f);

    // And is non-negative for an arbitrary pair.
    Pcg32 rng2(6);
    CHECK(scalar_value(lc.style(random_image(16, 10), rng2)) >= 0.0f);
}

TEST_CASE("loss computer validates its configuration") {
    const ToyEncoder enc(3, 16);
    const Tensor text = rows({64}, gc::random_data(64, -1.0f, 1.0f, 2));
    const Tensor style_img = random_image(16, 3);
    CHECK_THROWS_AS(LossComputer(enc, enc, text, style_img, {0.0f, 0.0f, 4, 16}), ConfigError);
    CHECK_THROWS_AS(LossComputer(enc, enc, text, style_img, {-1.0f, 1.0f, 4, 16}), ConfigError);
    CHECK_THROWS_AS(LossComputer(enc, enc, text, style_img, {1.0f, 1.0f, 0, 16}), ConfigError);
    CHECK_THROWS_AS(LossComputer(enc, enc, text, style_img, {1.0f, 1.0f, 4, 0}), ConfigError);
    CHECK_THROWS_AS(LossComputer(enc, enc, text, style_img, {1.0f, 1.0f, 4, 4096}), ConfigError);
    CHECK_THROWS_AS(LossComputer(enc, enc, rows({8}, gc::random_data(8, -1.0f, 1.0f, 3)),
                                 style_img),
                    ConfigError);
    CHECK_THROWS_AS(LossComputer(enc, enc, text, Tensor::zeros({1, 16, 16})), ShapeError);
}

TEST_CASE("zero-weight terms are skipped and the combination is exact") {
    const ToyEncoder enc(11, 16);
    const Tensor text = rows({64}, gc::random_data(64, -1.0f, 1.0f, 4));
    const Tensor style_img = random_image(16, 5);
    const Drawing d = spread_drawing(24, 3, 41);
    const RasterSettings rs{24, 24, {1.0f, 1.0f, 1.0f}, 1.0f, 8};

    auto eval = [&](float lc_w, float ls_w, bool wc, bool ws) {
        const LossComputer lc(enc, enc, text, style_img, {lc_w, ls_w, 2, 16});
        Tape tape;
        const ParamGroups pg = param_groups(d, &tape);
        Pcg32 aug(100);
        Pcg32 feat(200);
        return lc.evaluate(pg, rs, wc, ws, aug, feat);
    };

    const LossTerms both = eval(2.0f, 0.5f, true, true);
    REQUIRE(both.content.defined());
    REQUIRE(both.style.defined());
    const float c = scalar_value(both.content);
    const float s = scalar_value(both.style);
    CHECK(c >= -1.0f);
    CHECK(c <= 1.0f);
    CHECK(s >= 0.0f);
    const float wc = 2.0f * c;
    const float ws = 0.5f * s;
    CHECK(scalar_value(both.combined) == wc + ws);

    const LossTerms content_only = eval(1.0f, 0.0f, true, true);
    CHECK(content_only.content.defined());
    CHECK(!content_only.style.defined());
    CHECK(scalar_value(content_only.combined) == scalar_value(content_only.content));

    const LossTerms style_only = eval(0.0f, 1.0f, true, true);
    CHECK(!style_only.content.defined());
    CHECK(style_only.style.defined());

    const LossTerms none = eval(1.0f, 1.0f, false, false);
    CHECK(!none.content.defined());
    CHECK(!none.style.defined());
    CHECK(!none.combined.defined());

    // Same seeds, fresh computer: identical values.
    const LossTerms again = eval(2.0f, 0.5f, true, true);
    CHECK(scalar_value(again.combined) == scalar_value(both.combined));
}

TEST_CASE("combined objective gradient matches finite differences end to end") {
    const ToyEncoder enc(17, 16);
    const Tensor text = rows({64}, gc::random_data(64, -1.0f, 1.0f, 6));
    const Tensor style_img = random_image(16, 7);
    const LossComputer lc(enc, enc, text, style_img, {1.0f, 1.0f, 2, 12});
    const RasterSettings rs{24, 24, {1.0f, 1.0f, 1.0f}, 1.0f, 8};

    const Drawing d = spread_drawing(24, 3, 57);
    const ParamGroups flat = param_groups(d);

    auto as_input = [](const Tensor& t) {
        return gc::Input{t.shape(), {t.values().begin(), t.values().end()}};
    };

    gc::Options opts;
    // Trajectory and radius gradients ride the rasterizer's soft edges and
    // need a coarse step to rise above the f32 noise floor; colors feed the
    // encoder directly and tolerate a fine one. Kink retries cover the
    // encoder's piecewise-linear activations.
    opts.h_per_input = {0.05f, 0.05f, 0.005f};
    opts.rtol = 1e-2;
    opts.atol = 2e-3;
    opts.allow_kinks = true;
    gc::check("combined objective",
              {as_input(flat.trajectories), as_input(flat.radii), as_input(flat.colors)},
              [&](Tape&, std::vector<Tensor>& in) {
                  const ParamGroups pg{in[0], in[1], in[2]};
                  Pcg32 aug(900);
                  Pcg32 feat(901);
                  return lc.evaluate(pg, rs, true, true, aug, feat).combined;
              },
              opts);
}
