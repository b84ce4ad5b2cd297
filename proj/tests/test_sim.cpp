#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstring>
#include <random>
#include <set>

#include "core/encode.hpp"
#include "core/grid.hpp"
#include "core/scene.hpp"
#include "core/sim.hpp"

using namespace spnerf;

namespace {

SceneBundle sim_bundle(std::uint64_t seed, GridDims dims = {32, 32, 32}, double sparsity = 0.04,
                       std::uint32_t k = 4, std::uint32_t t = 1024) {
    SceneParams sp;
    sp.dims = dims;
    sp.sparsity = sparsity;
    sp.seed = seed;
    DenseGrid g = generate_scene(sp);
    EncodeConfig cfg;
    cfg.subgrid_count = k;
    cfg.table_size = t;
    return encode(g, make_default_mlp(), cfg);
}

Camera sim_camera(const GridDims& dims, std::uint32_t res, float angle = 0.0f) {
    float cx = 0.5f * (dims.x - 1), cy = 0.5f * (dims.y - 1), cz = 0.5f * (dims.z - 1);
    float r = 1.8f * dims.z;
    return make_lookat_camera({cx + r * std::sin(angle), cy, cz - r * std::cos(angle)},
                              {cx, cy, cz}, {0, 1, 0}, static_cast<float>(res), res, res);
}

} // namespace

TEST_CASE("systolic cost reference points") {
    CHECK(systolic_cycles(64, 40, 128, 64, 16) == 664);
    CHECK(systolic_cycles(64, 128, 128, 64, 16) == 1102);
    CHECK(systolic_cycles(64, 128, 3, 64, 16) == 206);
    // one tile: K + R + C - 2
    CHECK(systolic_cycles(8, 16, 8, 8, 8) == 16 + 8 + 8 - 2);
}

TEST_CASE("systolic cost is monotone in every dimension") {
    std::mt19937 rng(3);
    for (int i = 0; i < 200; ++i) {
        std::uint64_t m = 1 + rng() % 256, k = 1 + rng() % 256, n = 1 + rng() % 256;
        std::uint64_t r = 1 + rng() % 64, c = 1 + rng() % 64;
        auto base = systolic_cycles(m, k, n, r, c);
        CHECK(systolic_cycles(m + 8, k, n, r, c) >= base);
        CHECK(systolic_cycles(m, k + 8, n, r, c) >= base);
        CHECK(systolic_cycles(m, k, n + 8, r, c) >= base);
    }
}

TEST_CASE("block-circulant buffer round trip is conflict-free") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<float> u(-2.0f, 2.0f);
    BlockCirculantBuffer buf(64);
    std::array<std::array<float, kMlpIn>, 64> ref;
    for (std::uint32_t j = 0; j < 64; ++j) {
        for (auto& v : ref[j]) v = u(rng);
        buf.write(j, std::span<const float, kMlpIn>(ref[j]));
    }
    for (std::uint32_t j = 0; j < 64; ++j) {
        std::array<int, BlockCirculantBuffer::kBanks> banks;
        auto got = buf.read(j, &banks);
        CHECK(got == ref[j]);
        std::set<int> distinct(banks.begin(), banks.end());
        CHECK(distinct.size() == BlockCirculantBuffer::kBanks);
    }
}

TEST_CASE("frame traffic accounting is exact") {
    SceneBundle b = sim_bundle(9);
    Camera cam = sim_camera(b.dims, 24);
    RenderConfig rc;
    FrameTrace trace;
    render_image(b, cam, rc, &trace);
    std::uint64_t bytes = frame_dram_bytes(b, trace);

    SimConfig sc;
    SimResult res = simulate_frame(b, cam, rc, sc);
    CHECK(res.stats.dram_bytes_read == bytes);

    sc.assume_preloaded = true;
    SimResult pre = simulate_frame(b, cam, rc, sc);
    CHECK(pre.stats.dram_bytes_read == 0);
    CHECK(pre.stats.stall_dram_cycles == 0);
    CHECK(pre.stats.total_cycles <= res.stats.total_cycles);
}

TEST_CASE("no-stall single-batch cycle count matches the closed form") {
    // a fully occupied 16-cube and one giant step give each of the 64 rays
    // exactly one sample, all of them through the MLP
    SceneParams sp;
    sp.dims = {16, 16, 16};
    sp.sparsity = 1.0;
    sp.seed = 4;
    DenseGrid g = generate_scene(sp);
    EncodeConfig ec;
    ec.subgrid_count = 1;
    ec.table_size = 4096;
    SceneBundle b = encode(g, make_default_mlp(), ec);

    Camera cam = make_lookat_camera({7.5f, 7.5f, -600.0f}, {7.5f, 7.5f, 7.5f}, {0, 1, 0},
                                    2000.0f, 8, 8);
    RenderConfig rc;
    rc.step = 12.0f;
    FrameTrace trace;
    render_image(b, cam, rc, &trace);
    REQUIRE(trace.samples.size() == 64);
    for (const auto& s : trace.samples) REQUIRE(s.needs_mlp == 1);

    SimConfig sc;
    sc.assume_preloaded = true;
    SimResult res = simulate_frame(b, cam, rc, sc);
    std::uint64_t expect = sc.sgpu_fill() + 63ull * sc.sgpu_issue_interval() +
                           systolic_cycles(64, kMlpIn, kMlpHidden, 64, 16) +
                           systolic_cycles(64, kMlpHidden, kMlpHidden, 64, 16) +
                           systolic_cycles(64, kMlpHidden, kMlpOut, 64, 16) + sc.output_drain;
    CHECK(expect == 2241);
    CHECK(res.stats.total_cycles == expect);
    CHECK(res.stats.batches == 1);
    CHECK(res.stats.mlp_samples == 64);
    CHECK(res.stats.stall_dram_cycles == 0);
    CHECK(res.stats.stall_buffer_cycles == 0);
}

TEST_CASE("simulator pixels are bit-identical to the renderer") {
    for (std::uint64_t seed : {21ull, 22ull, 23ull}) {
        SceneBundle b = sim_bundle(seed);
        RenderConfig rc;
        for (float angle : {0.0f, 1.1f}) {
            Camera cam = sim_camera(b.dims, 24, angle);
            Image ref = render_image(b, cam, rc);
            SimResult res = simulate_frame(b, cam, rc, SimConfig{});
            REQUIRE(res.image.rgb.size() == ref.rgb.size());
            CHECK(std::memcmp(res.image.rgb.data(), ref.rgb.data(),
                              ref.rgb.size() * sizeof(float)) == 0);
        }
    }
}

TEST_CASE("sample and batch conservation") {
    SceneBundle b = sim_bundle(31);
    Camera cam = sim_camera(b.dims, 32);
    RenderConfig rc;
    FrameTrace trace;
    render_image(b, cam, rc, &trace);
    std::uint64_t mlp = 0;
    for (const auto& s : trace.samples) mlp += s.needs_mlp;

    SimResult res = simulate_frame(b, cam, rc, SimConfig{});
    CHECK(res.stats.samples == trace.samples.size());
    CHECK(res.stats.mlp_samples == mlp);
    CHECK(res.stats.batches == (mlp + 63) / 64);
    CHECK(res.stats.tiu.processed == res.stats.samples);
    CHECK(res.stats.fps == doctest::Approx(1e9 / static_cast<double>(res.stats.total_cycles)));
}

TEST_CASE("double buffering never slows a frame down") {
    SceneBundle b = sim_bundle(41, {48, 32, 32}, 0.05, 8, 1024);
    Camera cam = sim_camera(b.dims, 32);
    RenderConfig rc;
    SimConfig on, off;
    off.double_buffering = false;
    SimResult a = simulate_frame(b, cam, rc, on);
    SimResult c = simulate_frame(b, cam, rc, off);
    CHECK(a.stats.total_cycles <= c.stats.total_cycles);
    CHECK(a.stats.dram_bytes_read == c.stats.dram_bytes_read);
}

TEST_CASE("cycle count reacts to bandwidth as expected") {
    SceneBundle b = sim_bundle(51, {48, 32, 32}, 0.05, 8, 1024);
    Camera cam = sim_camera(b.dims, 32);
    RenderConfig rc;
    SimConfig fast, slow;
    slow.dram_bandwidth = fast.dram_bandwidth / 64.0;
    SimResult f = simulate_frame(b, cam, rc, fast);
    SimResult s = simulate_frame(b, cam, rc, slow);
    CHECK(s.stats.total_cycles >= f.stats.total_cycles);
}

TEST_CASE("simulation is deterministic") {
    SceneBundle b = sim_bundle(61);
    Camera cam = sim_camera(b.dims, 24);
    RenderConfig rc;
    SimResult a = simulate_frame(b, cam, rc, SimConfig{});
    SimResult c = simulate_frame(b, cam, rc, SimConfig{});
    CHECK(a.stats.total_cycles == c.stats.total_cycles);
    CHECK(a.stats.dram_bytes_read == c.stats.dram_bytes_read);
    CHECK(a.stats.stall_dram_cycles == c.stats.stall_dram_cycles);
}

TEST_CASE("configurations that overflow on-chip memory are rejected") {
    SceneBundle b = sim_bundle(71);
    Camera cam = sim_camera(b.dims, 16);
    RenderConfig rc;
    SimConfig sc;
    sc.sgpu_sram_bytes = 1024;
    CHECK_THROWS_AS(simulate_frame(b, cam, rc, sc), InfeasibleConfigError);
    sc = SimConfig{};
    sc.mlp_sram_bytes = 1024;
    CHECK_THROWS_AS(simulate_frame(b, cam, rc, sc), InfeasibleConfigError);
}
