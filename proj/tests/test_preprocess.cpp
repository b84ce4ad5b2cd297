#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <vector>

#include "core/encode.hpp"
#include "core/grid.hpp"
#include "core/scene.hpp"

using namespace spnerf;

TEST_CASE("hash matches the prebuilt golden vectors") {
    std::ifstream f(std::string(SPNERF_TEST_DATA) + "/hash_golden.bin", std::ios::binary);
    REQUIRE(f.good());
    auto read_u32 = [&] {
        std::uint8_t b[4];
        f.read(reinterpret_cast<char*>(b), 4);
        return static_cast<std::uint32_t>(b[0]) | (b[1] << 8) | (b[2] << 16) |
               (static_cast<std::uint32_t>(b[3]) << 24);
    };
    std::uint32_t count = read_u32();
    REQUIRE(count == 100000);
    std::uint64_t mismatches = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        Position3 p{read_u32(), read_u32(), read_u32()};
        std::uint32_t t = read_u32();
        std::uint32_t expect = read_u32();
        if (hash_index(p, t) != expect) ++mismatches;
    }
    REQUIRE(f.good());
    CHECK(mismatches == 0);
}

TEST_CASE("hash spot values") {
    CHECK(hash_index({1, 1, 1}, 32768) == 11813);
    CHECK(hash_index({2, 3, 5}, 4096) == 2296);
    CHECK(hash_index({123456, 7890, 424242}, 32768) == 31592);
    CHECK(hash_index({0, 0, 0}, 1024) == 0);
}

TEST_CASE("subgrid partition covers the non-zero set in order") {
    SceneParams sp;
    sp.dims = {48, 32, 32};
    sp.seed = 11;
    DenseGrid g = generate_scene(sp);
    auto nz = nonzero_set(g);
    std::uint32_t k = 8;
    auto subs = partition_subgrids(nz, k, g.dims);
    REQUIRE(subs.size() == k);
    std::uint32_t w = subgrid_width(g.dims.x, k);
    CHECK(w == 6);
    std::vector<Position3> flat;
    for (std::uint32_t i = 0; i < k; ++i)
        for (const auto& p : subs[i]) {
            CHECK(p.x / w == i);
            flat.push_back(p);
        }
    // concatenation preserves the lexicographic order of the source set
    CHECK(flat == nz);
}

TEST_CASE("keep set size follows keep_fraction") {
    SceneParams sp;
    sp.dims = {32, 32, 32};
    sp.seed = 2;
    DenseGrid g = generate_scene(sp);
    auto nz = nonzero_set(g);
    Codebook cb = make_default_codebook();
    auto asn = assign_indices(g, nz, 0.01, 99.9, cb);
    auto expect = static_cast<std::uint32_t>(
        std::llround(0.01 * static_cast<double>(nz.size())));
    CHECK(asn.true_grid.rows() == expect);
    std::uint64_t kept = 0;
    for (std::uint32_t idx : asn.index_of) {
        CHECK(idx < (1u << 18));
        if (idx >= kCodebookRows) ++kept;
    }
    CHECK(kept == expect);
}

TEST_CASE("kept rows are the highest-norm voxels and dequantize within one step") {
    SceneParams sp;
    sp.dims = {32, 32, 32};
    sp.seed = 21;
    DenseGrid g = generate_scene(sp);
    auto nz = nonzero_set(g);
    Codebook cb = make_default_codebook();
    auto asn = assign_indices(g, nz, 0.02, 99.9, cb);
    float s = asn.true_grid.scale;
    REQUIRE(s > 0.0f);
    float min_kept = 1e30f, max_dropped = 0.0f;
    for (std::size_t i = 0; i < nz.size(); ++i) {
        const float* f = &g.features[g.index_of(nz[i]) * kFeatureDim];
        float n2 = 0;
        for (int c = 0; c < kFeatureDim; ++c) n2 += f[c] * f[c];
        float n = std::sqrt(n2);
        if (asn.index_of[i] >= kCodebookRows) {
            min_kept = std::min(min_kept, n);
            std::uint32_t row = asn.index_of[i] - kCodebookRows;
            for (int c = 0; c < kFeatureDim; ++c) {
                float deq = s * asn.true_grid.values[static_cast<std::size_t>(row) * kFeatureDim + c];
                CHECK(std::fabs(deq - f[c]) <= s * 1.0001f);
            }
        } else {
            max_dropped = std::max(max_dropped, n);
        }
    }
    CHECK(min_kept >= max_dropped);
}

TEST_CASE("collision count matches a brute-force replay") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        SceneParams sp;
        sp.dims = {32, 32, 32};
        sp.sparsity = 0.05;
        sp.seed = seed;
        DenseGrid g = generate_scene(sp);
        auto nz = nonzero_set(g);
        std::uint32_t k = 4, t = 1024;
        Codebook cb = make_default_codebook();
        auto asn = assign_indices(g, nz, 0.01, 99.9, cb);
        auto subs = partition_subgrids(nz, k, g.dims);
        CollisionStats stats;
        build_tables(subs, g, nz, asn.index_of, t, &stats);

        std::uint64_t brute = 0;
        std::vector<Position3> brute_victims;
        for (const auto& sub : subs) {
            std::map<std::uint32_t, bool> taken;
            for (const auto& p : sub) {
                std::uint32_t slot = hash_index(p, t);
                if (taken[slot]) {
                    ++brute;
                    brute_victims.push_back(p);
                }
                taken[slot] = true;
            }
        }
        CHECK(stats.collisions == brute);
        CHECK(stats.victims == brute_victims);
    }
}

TEST_CASE("collision rate tracks the birthday estimate within 3x") {
    // expected occupied-slot shortfall for |S| balls in T bins:
    // |S| - T*(1 - (1-1/T)^|S|)
    for (std::uint64_t seed : {10ull, 11ull, 12ull, 13ull, 14ull}) {
        SceneParams sp;
        sp.dims = {32, 32, 32};
        sp.sparsity = 0.04;
        sp.seed = seed;
        DenseGrid g = generate_scene(sp);
        auto nz = nonzero_set(g);
        std::uint32_t k = 4, t = 2048;
        auto subs = partition_subgrids(nz, k, g.dims);
        Codebook cb = make_default_codebook();
        auto asn = assign_indices(g, nz, 0.01, 99.9, cb);
        CollisionStats stats;
        build_tables(subs, g, nz, asn.index_of, t, &stats);
        double expect = 0;
        for (const auto& sub : subs) {
            double n = static_cast<double>(sub.size());
            expect += n - t * (1.0 - std::pow(1.0 - 1.0 / t, n));
        }
        REQUIRE(expect > 0);
        double ratio = static_cast<double>(stats.collisions) / expect;
        CHECK(ratio > 1.0 / 3.0);
        CHECK(ratio < 3.0);
    }
}

TEST_CASE("encode validates its configuration") {
    SceneParams sp;
    sp.dims = {16, 16, 16};
    DenseGrid g = generate_scene(sp);
    MlpWeights mlp = make_default_mlp();
    EncodeConfig cfg;
    cfg.table_size = 1000; // not a power of two
    CHECK_THROWS_AS(encode(g, mlp, cfg), SpnerfError);
    cfg.table_size = 512; // below the minimum
    CHECK_THROWS_AS(encode(g, mlp, cfg), SpnerfError);
    cfg = EncodeConfig{};
    cfg.keep_fraction = 1.5;
    CHECK_THROWS_AS(encode(g, mlp, cfg), SpnerfError);
    cfg = EncodeConfig{};
    cfg.subgrid_count = 0;
    CHECK_THROWS_AS(encode(g, mlp, cfg), SpnerfError);
}

TEST_CASE("encode is deterministic") {
    SceneParams sp;
    sp.dims = {24, 24, 24};
    sp.seed = 77;
    DenseGrid g = generate_scene(sp);
    MlpWeights mlp = make_default_mlp();
    EncodeConfig cfg;
    cfg.subgrid_count = 4;
    cfg.table_size = 1024;
    SceneBundle a = encode(g, mlp, cfg);
    SceneBundle b = encode(g, mlp, cfg);
    REQUIRE(a.tables.size() == b.tables.size());
    for (std::size_t i = 0; i < a.tables.size(); ++i) {
        CHECK(a.tables[i].index == b.tables[i].index);
        CHECK(std::equal(a.tables[i].density.begin(), a.tables[i].density.end(),
                         b.tables[i].density.begin()));
    }
    CHECK(a.true_grid.values == b.true_grid.values);
    CHECK(a.true_grid.scale == b.true_grid.scale);
    CHECK(a.bitmap.bits == b.bitmap.bits);
}
