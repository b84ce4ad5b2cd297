// spnerf command-line front end. Links only the public C API; metrics and
// sweep documents are assembled here.
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spnerf/spnerf.h"

using nlohmann::json;

namespace {

struct Handle {
    // tiny RAII helpers over the C handles
    template <class T, void (*Free)(T*)>
    struct Owner {
        T* p = nullptr;
        ~Owner() { Free(p); }
        T** out() { return &p; }
        operator T*() const { return p; }
    };
};

using GridPtr = Handle::Owner<spnerf_grid, spnerf_grid_free>;
using BundlePtr = Handle::Owner<spnerf_bundle, spnerf_bundle_free>;
using CameraPtr = Handle::Owner<spnerf_camera, spnerf_camera_free>;
using ImagePtr = Handle::Owner<spnerf_image, spnerf_image_free>;

[[noreturn]] void die(spnerf_status st, const std::string& what) {
    std::cerr << "error: " << what << ": " << spnerf_status_name(st) << " ("
              << spnerf_last_error() << ")\n";
    std::exit(st == SPNERF_ERR_INVALID_ARG ? 2 : 1);
}

void check(spnerf_status st, const std::string& what) {
    if (st != SPNERF_OK) die(st, what);
}

void emit_metrics(const json& doc, const std::string& path) {
    json out = doc;
    out["schema_version"] = 1;
    std::string s = out.dump(2) + "\n";
    std::cout << s;
    if (!path.empty()) {
        std::ofstream f(path, std::ios::trunc);
        if (!f) {
            std::cerr << "error: cannot write metrics file " << path << "\n";
            std::exit(1);
        }
        f << s;
    }
}

spnerf_sim_params load_sim_params(const std::string& path) {
    spnerf_sim_params p;
    spnerf_sim_params_default(&p);
    if (path.empty()) return p;
    std::ifstream f(path);
    if (!f) {
        std::cerr << "error: cannot open sim config " << path << "\n";
        std::exit(2);
    }
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        std::cerr << "error: malformed sim config: " << e.what() << "\n";
        std::exit(2);
    }
    p.clock_hz = j.value("clock_hz", p.clock_hz);
    p.dram_bandwidth = j.value("dram_bandwidth", p.dram_bandwidth);
    p.dram_fixed_latency = j.value("dram_fixed_latency", p.dram_fixed_latency);
    p.systolic_rows = j.value("systolic_rows", p.systolic_rows);
    p.systolic_cols = j.value("systolic_cols", p.systolic_cols);
    p.gid_latency = j.value("gid_latency", p.gid_latency);
    p.blu_latency = j.value("blu_latency", p.blu_latency);
    p.hmu_latency = j.value("hmu_latency", p.hmu_latency);
    p.tiu_latency = j.value("tiu_latency", p.tiu_latency);
    p.output_drain = j.value("output_drain", p.output_drain);
    p.sgpu_sram_bytes = j.value("sgpu_sram_bytes", p.sgpu_sram_bytes);
    p.mlp_sram_bytes = j.value("mlp_sram_bytes", p.mlp_sram_bytes);
    p.double_buffering = j.value("double_buffering", p.double_buffering != 0) ? 1 : 0;
    p.assume_preloaded = j.value("assume_preloaded", p.assume_preloaded != 0) ? 1 : 0;
    return p;
}

spnerf_shape parse_shape(const std::string& s) {
    if (s == "sphere") return SPNERF_SHAPE_SPHERE;
    if (s == "torus") return SPNERF_SHAPE_TORUS;
    if (s == "blobs") return SPNERF_SHAPE_BLOBS;
    std::cerr << "error: unknown shape " << s << "\n";
    std::exit(2);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse volumetric neural rendering toolkit"};
    app.require_subcommand(1);

    // ---- gen-scene ----
    auto* gen = app.add_subcommand("gen-scene", "generate a procedural dense voxel grid");
    std::vector<std::uint32_t> dims{64, 64, 64};
    double gen_sparsity = 0.03;
    std::string gen_shape = "sphere";
    std::uint64_t gen_seed = 1;
    std::string gen_out, gen_metrics;
    gen->add_option("--dims", dims, "grid dims (1 or 3 values)")->expected(1, 3);
    gen->add_option("--sparsity", gen_sparsity, "target non-zero fraction");
    gen->add_option("--shape", gen_shape, "sphere|torus|blobs");
    gen->add_option("--seed", gen_seed, "random seed");
    gen->add_option("--out", gen_out, "output dense grid file")->required();
    gen->add_option("--metrics", gen_metrics, "metrics JSON path");

    // ---- encode ----
    auto* enc = app.add_subcommand("encode", "encode a dense grid into a scene bundle");
    std::string enc_in, enc_out, enc_metrics;
    spnerf_encode_params ep;
    spnerf_encode_params_default(&ep);
    enc->add_option("--in", enc_in, "dense grid file")->required();
    enc->add_option("--out", enc_out, "bundle output path")->required();
    enc->add_option("--subgrids", ep.subgrids, "subgrid count K");
    enc->add_option("--table-size", ep.table_size, "hash table entries T (power of two)");
    enc->add_option("--keep-fraction", ep.keep_fraction, "fraction stored raw in the true grid");
    enc->add_option("--metrics", enc_metrics, "metrics JSON path");

    // ---- render ----
    auto* ren = app.add_subcommand("render", "render a bundle (optionally vs the dense oracle)");
    std::string ren_bundle, ren_camera, ren_out, ren_oracle, ren_metrics;
    bool ablate_masking = false;
    spnerf_render_params rp;
    spnerf_render_params_default(&rp);
    ren->add_option("--bundle", ren_bundle, "bundle file")->required();
    ren->add_option("--camera", ren_camera, "camera JSON file")->required();
    ren->add_option("--out-image", ren_out, "output PPM path");
    ren->add_option("--oracle", ren_oracle, "paired dense grid file for PSNR");
    ren->add_flag("--ablate-masking", ablate_masking,
                  "also render with bitmap masking disabled and report both PSNR values");
    ren->add_option("--step", rp.step, "ray-march step, grid units");
    ren->add_flag("--white-background", rp.white_background, "composite onto white");
    ren->add_option("--metrics", ren_metrics, "metrics JSON path");

    // ---- sweep ----
    auto* swp = app.add_subcommand("sweep", "collision/PSNR sweep over K or T");
    std::string swp_param = "table-size", swp_csv, swp_metrics, swp_shape = "sphere";
    std::vector<std::uint64_t> swp_values;
    std::uint32_t swp_seeds = 5;
    std::vector<std::uint32_t> swp_dims{64, 64, 64};
    double swp_sparsity = 0.04;
    swp->add_option("--param", swp_param, "subgrids|table-size");
    swp->add_option("--values", swp_values, "parameter values")->required()->expected(-1);
    swp->add_option("--seeds", swp_seeds, "seeds per value");
    swp->add_option("--dims", swp_dims, "scene dims")->expected(1, 3);
    swp->add_option("--sparsity", swp_sparsity, "scene sparsity");
    swp->add_option("--shape", swp_shape, "scene shape");
    swp->add_option("--out", swp_csv, "CSV output path");
    swp->add_option("--metrics", swp_metrics, "metrics JSON path");

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "cycle-level accelerator simulation");
    std::string sim_bundle, sim_camera, sim_cfg, sim_metrics;
    sim->add_option("--bundle", sim_bundle, "bundle file")->required();
    sim->add_option("--camera", sim_camera, "camera JSON file")->required();
    sim->add_option("--sim-config", sim_cfg, "sim config JSON (defaults if omitted)");
    sim->add_option("--out-metrics", sim_metrics, "metrics JSON path");

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        if (dims.size() == 1) dims = {dims[0], dims[0], dims[0]};
        std::uint32_t d3[3] = {dims[0], dims[1], dims[2]};
        GridPtr g;
        check(spnerf_grid_generate(d3, gen_sparsity, parse_shape(gen_shape), gen_seed, g.out()),
              "gen-scene");
        check(spnerf_grid_save(g, gen_out.c_str()), "save grid");
        double measured = 0;
        check(spnerf_grid_sparsity(g, &measured), "sparsity");
        emit_metrics({{"command", "gen-scene"},
                      {"target_sparsity", gen_sparsity},
                      {"measured_sparsity", measured},
                      {"seed", gen_seed},
                      {"out", gen_out}},
                     gen_metrics);
        return 0;
    }

    if (enc->parsed()) {
        GridPtr g;
        check(spnerf_grid_load(enc_in.c_str(), g.out()), "load grid");
        BundlePtr b;
        check(spnerf_encode(g, &ep, b.out()), "encode");
        check(spnerf_bundle_write(b, enc_out.c_str()), "write bundle");
        spnerf_bundle_stats st;
        check(spnerf_bundle_stats_get(b, &st), "bundle stats");
        emit_metrics({{"command", "encode"},
                      {"subgrids", ep.subgrids},
                      {"table_size", ep.table_size},
                      {"keep_fraction", ep.keep_fraction},
                      {"nonzero_points", st.nonzero_points},
                      {"collisions", st.collisions},
                      {"collision_rate",
                       st.nonzero_points ? static_cast<double>(st.collisions) / st.nonzero_points
                                         : 0.0},
                      {"kept_points", st.kept_points},
                      {"encoded_bytes", st.encoded_bytes},
                      {"dense_bytes", st.dense_bytes},
                      {"reduction_ratio", st.reduction_ratio},
                      {"max_load_factor", st.max_load_factor}},
                     enc_metrics);
        return 0;
    }

    if (ren->parsed()) {
        BundlePtr b;
        check(spnerf_bundle_read(ren_bundle.c_str(), b.out()), "read bundle");
        CameraPtr cam;
        check(spnerf_camera_load(ren_camera.c_str(), cam.out()), "load camera");

        rp.use_masking = 1;
        ImagePtr img;
        check(spnerf_render(b, cam, &rp, img.out()), "render");
        if (!ren_out.empty()) check(spnerf_image_write_ppm(img, ren_out.c_str()), "write image");

        json doc = {{"command", "render"}, {"masking", true}};
        if (!ren_oracle.empty()) {
            GridPtr g;
            check(spnerf_grid_load(ren_oracle.c_str(), g.out()), "load oracle grid");
            ImagePtr ref;
            check(spnerf_render_reference(g, b, cam, &rp, ref.out()), "render oracle");
            double db = 0;
            check(spnerf_psnr(img, ref, &db), "psnr");
            doc["psnr_masked_db"] = std::isinf(db) ? 1e9 : db;
            if (ablate_masking) {
                spnerf_render_params rp2 = rp;
                rp2.use_masking = 0;
                ImagePtr raw;
                check(spnerf_render(b, cam, &rp2, raw.out()), "render unmasked");
                double db2 = 0;
                check(spnerf_psnr(raw, ref, &db2), "psnr unmasked");
                doc["psnr_unmasked_db"] = std::isinf(db2) ? 1e9 : db2;
            }
        } else if (ablate_masking) {
            std::cerr << "error: --ablate-masking requires --oracle for PSNR reporting\n";
            return 2;
        }
        if (!ren_out.empty()) doc["out_image"] = ren_out;
        emit_metrics(doc, ren_metrics);
        return 0;
    }

    if (swp->parsed()) {
        if (swp_param != "subgrids" && swp_param != "table-size") {
            std::cerr << "error: --param must be subgrids or table-size\n";
            return 2;
        }
        if (swp_values.empty()) {
            std::cerr << "error: --values must not be empty\n";
            return 2;
        }
        if (swp_dims.size() == 1) swp_dims = {swp_dims[0], swp_dims[0], swp_dims[0]};
        std::uint32_t d3[3] = {swp_dims[0], swp_dims[1], swp_dims[2]};

        std::string csv = "param,value,seed,collision_rate,psnr_db\n";
        json summary = json::array();
        for (std::uint64_t value : swp_values) {
            double sum_rate = 0, sum_psnr = 0;
            for (std::uint32_t s = 0; s < swp_seeds; ++s) {
                std::uint64_t seed = 1000 + s;
                GridPtr g;
                check(spnerf_grid_generate(d3, swp_sparsity, parse_shape(swp_shape), seed, g.out()),
                      "gen scene");
                spnerf_encode_params p = ep;
                spnerf_encode_params_default(&p);
                if (swp_param == "subgrids")
                    p.subgrids = static_cast<std::uint32_t>(value);
                else
                    p.table_size = static_cast<std::uint32_t>(value);
                BundlePtr b;
                check(spnerf_encode(g, &p, b.out()), "encode");
                spnerf_bundle_stats st;
                check(spnerf_bundle_stats_get(b, &st), "stats");
                double rate = st.nonzero_points
                                  ? static_cast<double>(st.collisions) / st.nonzero_points
                                  : 0.0;

                double cx = 0.5 * (d3[0] - 1), cy = 0.5 * (d3[1] - 1), cz = 0.5 * (d3[2] - 1);
                double pos[3] = {cx, cy, -0.9 * d3[2]};
                double look[3] = {cx, cy, cz};
                double up[3] = {0, 1, 0};
                CameraPtr cam;
                check(spnerf_camera_create(pos, look, up, 48.0, 48, 48, cam.out()), "camera");
                spnerf_render_params rp2;
                spnerf_render_params_default(&rp2);
                ImagePtr img, ref;
                check(spnerf_render(b, cam, &rp2, img.out()), "render");
                check(spnerf_render_reference(g, b, cam, &rp2, ref.out()), "render oracle");
                double db = 0;
                check(spnerf_psnr(img, ref, &db), "psnr");
                if (std::isinf(db)) db = 1e9;

                sum_rate += rate;
                sum_psnr += db;
                csv += swp_param + "," + std::to_string(value) + "," + std::to_string(seed) + "," +
                       std::to_string(rate) + "," + std::to_string(db) + "\n";
            }
            summary.push_back({{"value", value},
                               {"mean_collision_rate", sum_rate / swp_seeds},
                               {"mean_psnr_db", sum_psnr / swp_seeds}});
        }
        if (!swp_csv.empty()) {
            std::ofstream f(swp_csv, std::ios::trunc);
            if (!f) {
                std::cerr << "error: cannot write " << swp_csv << "\n";
                return 1;
            }
            f << csv;
        } else {
            std::cout << csv;
        }
        emit_metrics({{"command", "sweep"}, {"param", swp_param}, {"summary", summary}},
                     swp_metrics);
        return 0;
    }

    if (sim->parsed()) {
        BundlePtr b;
        check(spnerf_bundle_read(sim_bundle.c_str(), b.out()), "read bundle");
        CameraPtr cam;
        check(spnerf_camera_load(sim_camera.c_str(), cam.out()), "load camera");
        spnerf_sim_params sp = load_sim_params(sim_cfg);
        spnerf_render_params rp2;
        spnerf_render_params_default(&rp2);
        spnerf_sim_stats st;
        check(spnerf_simulate(b, cam, &rp2, &sp,
                              sim_metrics.empty() ? nullptr : sim_metrics.c_str(), &st),
              "simulate");
        emit_metrics({{"command", "simulate"},
                      {"total_cycles", st.total_cycles},
                      {"dram_bytes_read", st.dram_bytes_read},
                      {"samples", st.samples},
                      {"mlp_samples", st.mlp_samples},
                      {"batches", st.batches},
                      {"stall_dram_cycles", st.stall_dram_cycles},
                      {"stall_buffer_cycles", st.stall_buffer_cycles},
                      {"fps", st.fps},
                      {"sgpu_utilization", st.sgpu_utilization},
                      {"mlp_utilization", st.mlp_utilization}},
                     "");
        return 0;
    }

    return 2;
}
