#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "core/grid.hpp"
#include "core/scene.hpp"

using namespace spnerf;

TEST_CASE("scene has exactly the requested non-zero count") {
    for (double target : {0.02, 0.03, 0.0648}) {
        SceneParams p;
        p.dims = {32, 32, 32};
        p.sparsity = target;
        p.seed = 5;
        DenseGrid g = generate_scene(p);
        auto nz = nonzero_set(g);
        std::uint64_t expect = static_cast<std::uint64_t>(std::llround(target * g.dims.volume()));
        CHECK(nz.size() == expect);
        CHECK(sparsity(g) == doctest::Approx(target).epsilon(1e-3));
    }
}

TEST_CASE("scene generation is deterministic and seed-sensitive") {
    SceneParams p;
    p.dims = {24, 24, 24};
    p.seed = 42;
    DenseGrid a = generate_scene(p);
    DenseGrid b = generate_scene(p);
    CHECK(a.density == b.density);
    CHECK(a.features == b.features);
    p.seed = 43;
    DenseGrid c = generate_scene(p);
    CHECK(a.density != c.density);
}

TEST_CASE("nonzero_set is lexicographic and matches per-vertex predicate") {
    SceneParams p;
    p.dims = {16, 16, 16};
    p.shape = SceneShape::Torus;
    DenseGrid g = generate_scene(p);
    auto nz = nonzero_set(g);
    CHECK(std::is_sorted(nz.begin(), nz.end()));
    std::set<Position3> s(nz.begin(), nz.end());
    std::uint64_t count = 0;
    for (std::uint32_t x = 0; x < 16; ++x)
        for (std::uint32_t y = 0; y < 16; ++y)
            for (std::uint32_t z = 0; z < 16; ++z) {
                Position3 v{x, y, z};
                if (g.nonzero_at(v)) {
                    ++count;
                    CHECK(s.count(v) == 1);
                }
            }
    CHECK(count == nz.size());
}

TEST_CASE("bitmap bit set exactly for non-zero vertices") {
    SceneParams p;
    p.dims = {16, 16, 16};
    p.shape = SceneShape::Blobs;
    p.seed = 9;
    DenseGrid g = generate_scene(p);
    Bitmap bm = build_bitmap(g);
    for (std::uint32_t x = 0; x < 16; ++x)
        for (std::uint32_t y = 0; y < 16; ++y)
            for (std::uint32_t z = 0; z < 16; ++z) {
                Position3 v{x, y, z};
                CHECK(bm.get(v) == g.nonzero_at(v));
            }
}

TEST_CASE("default codebook is deterministic with bounded entries") {
    Codebook a = make_default_codebook();
    Codebook b = make_default_codebook();
    REQUIRE(a.entries.size() == kCodebookRows * kFeatureDim);
    CHECK(std::equal(a.entries.begin(), a.entries.end(), b.entries.begin()));
    for (std::uint32_t r = 0; r < kCodebookRows; ++r)
        for (int c = 0; c < kFeatureDim; ++c)
            CHECK(std::fabs(a.at(r, c)) <= 0.25f);
}

TEST_CASE("scene raw features clear the codebook norm ceiling") {
    Codebook cb = make_default_codebook();
    float ceiling = codebook_max_norm(cb);
    SceneParams p;
    p.dims = {32, 32, 32};
    p.seed = 3;
    DenseGrid g = generate_scene(p);
    auto nz = nonzero_set(g);
    std::uint64_t raw = 0;
    for (const auto& v : nz) {
        const float* f = &g.features[g.index_of(v) * kFeatureDim];
        float n2 = 0;
        for (int c = 0; c < kFeatureDim; ++c) n2 += f[c] * f[c];
        if (std::sqrt(n2) > ceiling) ++raw;
    }
    std::uint64_t expect_raw =
        static_cast<std::uint64_t>(std::llround(p.raw_fraction * static_cast<double>(nz.size())));
    CHECK(raw == expect_raw);
}

TEST_CASE("densities are half-representable") {
    SceneParams p;
    p.dims = {16, 16, 16};
    DenseGrid g = generate_scene(p);
    for (float d : g.density) {
        CHECK(d == half_round(d));
        if (d != 0.0f) {
            CHECK(d >= 0.5f);
            CHECK(d < 2.0f);
        }
    }
}
