#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/encode.hpp"
#include "core/grid.hpp"
#include "core/io.hpp"
#include "core/scene.hpp"

using namespace spnerf;

namespace {

std::filesystem::path tmp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("spnerf_fmt_" + name);
}

std::vector<char> slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

SceneBundle golden_bundle() {
    SceneParams sp;
    sp.dims = {16, 16, 16};
    sp.sparsity = 0.04;
    sp.seed = 20250823;
    DenseGrid g = generate_scene(sp);
    EncodeConfig cfg;
    cfg.subgrid_count = 2;
    cfg.table_size = 1024;
    return encode(g, make_default_mlp(), cfg);
}

} // namespace

TEST_CASE("bundle round trip is bit-identical") {
    SceneParams sp;
    sp.dims = {24, 24, 24};
    sp.sparsity = 0.05;
    sp.seed = 3;
    DenseGrid g = generate_scene(sp);
    EncodeConfig cfg;
    cfg.subgrid_count = 4;
    cfg.table_size = 2048;
    SceneBundle b = encode(g, make_default_mlp(), cfg);

    auto p1 = tmp_path("rt1.spnf"), p2 = tmp_path("rt2.spnf");
    write_bundle(b, p1.string());
    SceneBundle r = read_bundle(p1.string());
    write_bundle(r, p2.string());
    CHECK(slurp(p1) == slurp(p2));

    CHECK(r.dims == b.dims);
    CHECK(r.subgrid_count == b.subgrid_count);
    CHECK(r.table_size == b.table_size);
    CHECK(r.true_grid.values == b.true_grid.values);
    CHECK(r.true_grid.scale == b.true_grid.scale);
    CHECK(r.bitmap.bits == b.bitmap.bits);
    for (std::uint32_t k = 0; k < b.subgrid_count; ++k) {
        CHECK(r.tables[k].index == b.tables[k].index);
        CHECK(std::equal(r.tables[k].density.begin(), r.tables[k].density.end(),
                         b.tables[k].density.begin()));
    }
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("serialized size matches the closed-form formula") {
    std::mt19937 rng(12);
    for (int i = 0; i < 5; ++i) {
        SceneParams sp;
        sp.dims = {static_cast<std::uint32_t>(16 + 8 * (rng() % 3)), 16, 24};
        sp.sparsity = 0.03 + 0.01 * (rng() % 3);
        sp.seed = 100 + i;
        DenseGrid g = generate_scene(sp);
        EncodeConfig cfg;
        cfg.subgrid_count = 1 + rng() % 8;
        cfg.table_size = 1024u << (rng() % 3);
        SceneBundle b = encode(g, make_default_mlp(), cfg);
        auto p = tmp_path("sz.spnf");
        write_bundle(b, p.string());
        CHECK(std::filesystem::file_size(p) ==
              bundle_file_bytes(b.dims, b.subgrid_count, b.table_size, b.true_grid.rows()));
        std::filesystem::remove(p);
    }
}

TEST_CASE("truncated and corrupted bundles are rejected") {
    SceneBundle b = golden_bundle();
    auto p = tmp_path("bad.spnf");
    write_bundle(b, p.string());
    auto bytes = slurp(p);

    for (std::size_t cut : {std::size_t{0}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        f.write(bytes.data(), static_cast<std::streamsize>(cut));
        f.close();
        CHECK_THROWS_AS(read_bundle(p.string()), CorruptFileError);
    }

    // single flipped payload bit trips the checksum
    auto flipped = bytes;
    flipped[bytes.size() / 3] ^= 0x10;
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f.write(flipped.data(), static_cast<std::streamsize>(flipped.size()));
    f.close();
    CHECK_THROWS_AS(read_bundle(p.string()), CorruptFileError);

    CHECK_THROWS_AS(read_bundle("/nonexistent/path.spnf"), SpnerfError);
    std::filesystem::remove(p);
}

TEST_CASE("checked-in golden bundle matches a fresh encode byte for byte") {
    auto golden = std::string(SPNERF_TEST_DATA) + "/bundle_golden.spnf";
    SceneBundle b = golden_bundle();
    auto p = tmp_path("golden.spnf");
    write_bundle(b, p.string());
    CHECK(slurp(p) == slurp(golden));
    SceneBundle r = read_bundle(golden);
    CHECK(r.dims == GridDims{16, 16, 16});
    CHECK(r.subgrid_count == 2);
    CHECK(r.table_size == 1024);
    std::filesystem::remove(p);
}

TEST_CASE("dense grid container round trip") {
    SceneParams sp;
    sp.dims = {16, 24, 16};
    sp.seed = 55;
    DenseGrid g = generate_scene(sp);
    auto p = tmp_path("dense.bin");
    DenseGridMeta meta;
    meta.seed = 55;
    meta.generator = "sphere";
    save_dense(g, meta, p.string());

    DenseGridMeta got;
    DenseGrid r = load_dense(p.string(), &got);
    CHECK(r.dims == g.dims);
    CHECK(r.density == g.density);
    CHECK(r.features == g.features);
    CHECK(got.seed == 55);
    CHECK(got.generator == "sphere");

    // truncated payload
    auto bytes = slurp(p);
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 13));
    f.close();
    CHECK_THROWS_AS(load_dense(p.string()), CorruptFileError);
    std::filesystem::remove(p);
}

TEST_CASE("ppm image output") {
    Image img;
    img.width = 2;
    img.height = 2;
    img.rgb = {1.0f, 0.0f, 0.0f, 0.0f, 1.0f, 0.0f, 0.0f, 0.0f, 1.0f, 0.5f, 0.5f, 0.5f};
    auto p = tmp_path("img.ppm");
    write_image(img, p.string());
    auto bytes = slurp(p);
    std::string header(bytes.begin(), bytes.begin() + 11);
    CHECK(header == "P6\n2 2\n255\n");
    REQUIRE(bytes.size() == 11 + 12);
    CHECK(static_cast<unsigned char>(bytes[11]) == 255);
    CHECK(static_cast<unsigned char>(bytes[12]) == 0);
    CHECK(static_cast<unsigned char>(bytes[20]) == 128);
    std::filesystem::remove(p);
}

TEST_CASE("metrics documents carry a schema version") {
    auto p = tmp_path("metrics.json");
    write_metrics({{"alpha", 1.5}, {"beta", 7}}, p.string());
    std::ifstream f(p);
    nlohmann::json j;
    f >> j;
    CHECK(j["schema_version"] == 1);
    CHECK(j["alpha"] == 1.5);
    CHECK(j["beta"] == 7);
    std::filesystem::remove(p);
}

TEST_CASE("camera file loading") {
    auto p = tmp_path("cam.json");
    {
        std::ofstream f(p);
        f << R"({"position":[0,0,-40],"look_at":[0,0,0],"up":[0,1,0],)"
          << R"("focal":32.5,"resolution":[64,48]})";
    }
    Camera cam = load_camera(p.string());
    CHECK(cam.width == 64);
    CHECK(cam.height == 48);
    CHECK(cam.focal == 32.5f);
    CHECK(cam.position[2] == -40.0f);
    // looking straight down +z: rotation is the identity
    CHECK(cam.rotation[0][0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(cam.rotation[2][2] == doctest::Approx(1.0).epsilon(1e-6));

    {
        std::ofstream f(p, std::ios::trunc);
        f << "{not json";
    }
    CHECK_THROWS_AS(load_camera(p.string()), SpnerfError);
    std::filesystem::remove(p);
}

TEST_CASE("reduction ratio bookkeeping") {
    SceneBundle b = golden_bundle();
    double r = reduction_ratio(b);
    std::uint64_t payload = bundle_file_bytes(b.dims, b.subgrid_count, b.table_size,
                                              b.true_grid.rows()) -
                            mlp_weight_bytes();
    CHECK(r == doctest::Approx(static_cast<double>(dense_bytes(b.dims)) /
                               static_cast<double>(payload))
                   .epsilon(1e-9));
}
