#include "spnerf/spnerf.h"

#include <cstring>
#include <string>

#include <nlohmann/json.hpp>

#include "../core/encode.hpp"
#include "../core/grid.hpp"
#include "../core/io.hpp"
#include "../core/render.hpp"
#include "../core/scene.hpp"
#include "../core/sim.hpp"

using namespace spnerf;

struct spnerf_grid {
    DenseGrid grid;
    DenseGridMeta meta;
};
struct spnerf_bundle {
    SceneBundle bundle;
    bool has_collision_stats = false;
};
struct spnerf_camera {
    Camera cam;
};
struct spnerf_image {
    Image img;
};

namespace {

thread_local std::string g_last_error;

spnerf_status fail(spnerf_status s, const std::string& msg) {
    g_last_error = msg;
    return s;
}

template <class Fn>
spnerf_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const IoError& e) {
        return fail(SPNERF_ERR_IO, e.what());
    } catch (const CorruptFileError& e) {
        return fail(SPNERF_ERR_CORRUPT, e.what());
    } catch (const CapacityError& e) {
        return fail(SPNERF_ERR_CAPACITY, e.what());
    } catch (const InfeasibleConfigError& e) {
        return fail(SPNERF_ERR_INFEASIBLE, e.what());
    } catch (const SpnerfError& e) {
        return fail(SPNERF_ERR_INVALID_ARG, e.what());
    } catch (const std::exception& e) {
        return fail(SPNERF_ERR_INTERNAL, e.what());
    }
}

RenderConfig to_render_config(const spnerf_render_params* p) {
    RenderConfig cfg;
    if (!p) return cfg;
    cfg.step = static_cast<float>(p->step);
    cfg.near_clip = static_cast<float>(p->near_clip);
    cfg.far_clip = static_cast<float>(p->far_clip);
    cfg.density_shift = static_cast<float>(p->density_shift);
    cfg.white_background = p->white_background != 0;
    cfg.use_masking = p->use_masking != 0;
    return cfg;
}

SimConfig to_sim_config(const spnerf_sim_params* p) {
    SimConfig cfg;
    if (!p) return cfg;
    cfg.clock_hz = p->clock_hz;
    cfg.dram_bandwidth = p->dram_bandwidth;
    cfg.dram_fixed_latency = p->dram_fixed_latency;
    cfg.systolic_rows = p->systolic_rows;
    cfg.systolic_cols = p->systolic_cols;
    cfg.gid_latency = p->gid_latency;
    cfg.blu_latency = p->blu_latency;
    cfg.hmu_latency = p->hmu_latency;
    cfg.tiu_latency = p->tiu_latency;
    cfg.output_drain = p->output_drain;
    cfg.sgpu_sram_bytes = p->sgpu_sram_bytes;
    cfg.mlp_sram_bytes = p->mlp_sram_bytes;
    cfg.double_buffering = p->double_buffering != 0;
    cfg.assume_preloaded = p->assume_preloaded != 0;
    return cfg;
}

} // namespace

extern "C" {

const char* spnerf_status_name(spnerf_status status) {
    switch (status) {
        case SPNERF_OK: return "ok";
        case SPNERF_ERR_INVALID_ARG: return "invalid-argument";
        case SPNERF_ERR_IO: return "io-error";
        case SPNERF_ERR_CORRUPT: return "corrupt-file";
        case SPNERF_ERR_CAPACITY: return "capacity-exceeded";
        case SPNERF_ERR_INFEASIBLE: return "infeasible-config";
        case SPNERF_ERR_INTERNAL: return "internal-error";
    }
    return "unknown";
}

const char* spnerf_last_error(void) { return g_last_error.c_str(); }

spnerf_status spnerf_grid_generate(const uint32_t dims[3], double sparsity, spnerf_shape shape,
                                   uint64_t seed, spnerf_grid** out) {
    if (!dims || !out) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        SceneParams p;
        p.dims = {dims[0], dims[1], dims[2]};
        p.sparsity = sparsity;
        switch (shape) {
            case SPNERF_SHAPE_SPHERE: p.shape = SceneShape::Sphere; break;
            case SPNERF_SHAPE_TORUS: p.shape = SceneShape::Torus; break;
            case SPNERF_SHAPE_BLOBS: p.shape = SceneShape::Blobs; break;
            default: throw SpnerfError("unknown shape");
        }
        p.seed = seed;
        auto* g = new spnerf_grid;
        g->grid = generate_scene(p);
        g->meta.seed = seed;
        g->meta.generator = shape == SPNERF_SHAPE_SPHERE  ? "sphere"
                            : shape == SPNERF_SHAPE_TORUS ? "torus"
                                                          : "blobs";
        *out = g;
        return SPNERF_OK;
    });
}

spnerf_status spnerf_grid_load(const char* path, spnerf_grid** out) {
    if (!path || !out) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto* g = new spnerf_grid;
        try {
            g->grid = load_dense(path, &g->meta);
        } catch (...) {
            delete g;
            throw;
        }
        *out = g;
        return SPNERF_OK;
    });
}

spnerf_status spnerf_grid_save(const spnerf_grid* grid, const char* path) {
    if (!grid || !path) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        save_dense(grid->grid, grid->meta, path);
        return SPNERF_OK;
    });
}

spnerf_status spnerf_grid_dims(const spnerf_grid* grid, uint32_t dims[3]) {
    if (!grid || !dims) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    dims[0] = grid->grid.dims.x;
    dims[1] = grid->grid.dims.y;
    dims[2] = grid->grid.dims.z;
    return SPNERF_OK;
}

spnerf_status spnerf_grid_sparsity(const spnerf_grid* grid, double* out) {
    if (!grid || !out) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    *out = sparsity(grid->grid);
    return SPNERF_OK;
}

void spnerf_grid_free(spnerf_grid* grid) { delete grid; }

void spnerf_encode_params_default(spnerf_encode_params* params) {
    if (!params) return;
    params->subgrids = 64;
    params->table_size = 32768;
    params->keep_fraction = 0.01;
    params->quant_percentile = 99.9;
}

spnerf_status spnerf_encode(const spnerf_grid* grid, const spnerf_encode_params* params,
                            spnerf_bundle** out) {
    if (!grid || !out) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        EncodeConfig cfg;
        if (params) {
            cfg.subgrid_count = params->subgrids;
            cfg.table_size = params->table_size;
            cfg.keep_fraction = params->keep_fraction;
            cfg.quant_percentile = params->quant_percentile;
        }
        auto* b = new spnerf_bundle;
        try {
            b->bundle = encode(grid->grid, make_default_mlp(), cfg);
        } catch (...) {
            delete b;
            throw;
        }
        b->has_collision_stats = true;
        *out = b;
        return SPNERF_OK;
    });
}

spnerf_status spnerf_bundle_write(const spnerf_bundle* bundle, const char* path) {
    if (!bundle || !path) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        write_bundle(bundle->bundle, path);
        return SPNERF_OK;
    });
}

spnerf_status spnerf_bundle_read(const char* path, spnerf_bundle** out) {
    if (!path || !out) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto* b = new spnerf_bundle;
        try {
            b->bundle = read_bundle(path);
        } catch (...) {
            delete b;
            throw;
        }
        *out = b;
        return SPNERF_OK;
    });
}

spnerf_status spnerf_bundle_stats_get(const spnerf_bundle* bundle, spnerf_bundle_stats* out) {
    if (!bundle || !out) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    const SceneBundle& b = bundle->bundle;
    std::memset(out, 0, sizeof(*out));
    std::uint64_t nz = 0;
    double max_load = 0.0;
    for (auto n : b.collision_stats.subgrid_points) {
        nz += n;
        max_load = std::max(max_load, static_cast<double>(n) / b.table_size);
    }
    out->nonzero_points = nz;
    out->collisions = b.collision_stats.collisions;
    out->kept_points = b.true_grid.rows();
    out->encoded_bytes = bundle_file_bytes(b.dims, b.subgrid_count, b.table_size, b.true_grid.rows());
    out->dense_bytes = dense_bytes(b.dims);
    out->reduction_ratio = reduction_ratio(b);
    out->max_load_factor = max_load;
    return SPNERF_OK;
}

void spnerf_bundle_free(spnerf_bundle* bundle) { delete bundle; }

spnerf_status spnerf_camera_create(const double position[3], const double look_at[3],
                                   const double up[3], double focal, uint32_t width,
                                   uint32_t height, spnerf_camera** out) {
    if (!position || !look_at || !up || !out) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    if (width == 0 || height == 0 || focal <= 0)
        return fail(SPNERF_ERR_INVALID_ARG, "camera resolution and focal must be positive");
    return guarded([&] {
        auto* c = new spnerf_camera;
        c->cam = make_lookat_camera(
            {static_cast<float>(position[0]), static_cast<float>(position[1]),
             static_cast<float>(position[2])},
            {static_cast<float>(look_at[0]), static_cast<float>(look_at[1]),
             static_cast<float>(look_at[2])},
            {static_cast<float>(up[0]), static_cast<float>(up[1]), static_cast<float>(up[2])},
            static_cast<float>(focal), width, height);
        *out = c;
        return SPNERF_OK;
    });
}

spnerf_status spnerf_camera_load(const char* path, spnerf_camera** out) {
    if (!path || !out) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto* c = new spnerf_camera;
        try {
            c->cam = load_camera(path);
        } catch (...) {
            delete c;
            throw;
        }
        *out = c;
        return SPNERF_OK;
    });
}

void spnerf_camera_free(spnerf_camera* camera) { delete camera; }

void spnerf_render_params_default(spnerf_render_params* params) {
    if (!params) return;
    params->step = 0.5;
    params->near_clip = 0.0;
    params->far_clip = 1e9;
    params->density_shift = 0.0;
    params->white_background = 0;
    params->use_masking = 1;
}

spnerf_status spnerf_render(const spnerf_bundle* bundle, const spnerf_camera* camera,
                            const spnerf_render_params* params, spnerf_image** out) {
    if (!bundle || !camera || !out) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto* img = new spnerf_image;
        try {
            img->img = render_image(bundle->bundle, camera->cam, to_render_config(params));
        } catch (...) {
            delete img;
            throw;
        }
        *out = img;
        return SPNERF_OK;
    });
}

spnerf_status spnerf_render_reference(const spnerf_grid* grid, const spnerf_bundle* bundle,
                                      const spnerf_camera* camera,
                                      const spnerf_render_params* params, spnerf_image** out) {
    if (!grid || !bundle || !camera || !out) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto* img = new spnerf_image;
        try {
            img->img = render_image_dense(grid->grid, bundle->bundle.mlp, camera->cam,
                                          to_render_config(params));
        } catch (...) {
            delete img;
            throw;
        }
        *out = img;
        return SPNERF_OK;
    });
}

spnerf_status spnerf_image_size(const spnerf_image* image, uint32_t* width, uint32_t* height) {
    if (!image || !width || !height) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    *width = image->img.width;
    *height = image->img.height;
    return SPNERF_OK;
}

spnerf_status spnerf_image_data(const spnerf_image* image, const float** data) {
    if (!image || !data) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    *data = image->img.rgb.data();
    return SPNERF_OK;
}

spnerf_status spnerf_image_write_ppm(const spnerf_image* image, const char* path) {
    if (!image || !path) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        write_image(image->img, path);
        return SPNERF_OK;
    });
}

spnerf_status spnerf_psnr(const spnerf_image* a, const spnerf_image* b, double* out) {
    if (!a || !b || !out) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        *out = psnr(a->img, b->img);
        return SPNERF_OK;
    });
}

void spnerf_image_free(spnerf_image* image) { delete image; }

void spnerf_sim_params_default(spnerf_sim_params* params) {
    if (!params) return;
    SimConfig cfg;
    params->clock_hz = cfg.clock_hz;
    params->dram_bandwidth = cfg.dram_bandwidth;
    params->dram_fixed_latency = cfg.dram_fixed_latency;
    params->systolic_rows = cfg.systolic_rows;
    params->systolic_cols = cfg.systolic_cols;
    params->gid_latency = cfg.gid_latency;
    params->blu_latency = cfg.blu_latency;
    params->hmu_latency = cfg.hmu_latency;
    params->tiu_latency = cfg.tiu_latency;
    params->output_drain = cfg.output_drain;
    params->sgpu_sram_bytes = cfg.sgpu_sram_bytes;
    params->mlp_sram_bytes = cfg.mlp_sram_bytes;
    params->double_buffering = cfg.double_buffering ? 1 : 0;
    params->assume_preloaded = cfg.assume_preloaded ? 1 : 0;
}

spnerf_status spnerf_simulate(const spnerf_bundle* bundle, const spnerf_camera* camera,
                              const spnerf_render_params* render_params,
                              const spnerf_sim_params* sim_params, const char* metrics_path,
                              spnerf_sim_stats* out) {
    if (!bundle || !camera || !out) return fail(SPNERF_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        RenderConfig rcfg = to_render_config(render_params);
        SimConfig scfg = to_sim_config(sim_params);
        SimResult res = simulate_frame(bundle->bundle, camera->cam, rcfg, scfg);

        // timing must never alter values
        Image ref = render_image(bundle->bundle, camera->cam, rcfg);
        if (ref.rgb.size() != res.image.rgb.size() ||
            std::memcmp(ref.rgb.data(), res.image.rgb.data(), ref.rgb.size() * sizeof(float)) != 0)
            throw SpnerfError("simulator pixels diverged from the reference renderer");

        const SimStats& st = res.stats;
        std::memset(out, 0, sizeof(*out));
        out->total_cycles = st.total_cycles;
        out->dram_bytes_read = st.dram_bytes_read;
        out->samples = st.samples;
        out->mlp_samples = st.mlp_samples;
        out->batches = st.batches;
        out->stall_dram_cycles = st.stall_dram_cycles;
        out->stall_buffer_cycles = st.stall_buffer_cycles;
        out->fps = st.fps;
        out->sgpu_utilization = st.utilization(st.tiu);
        out->mlp_utilization = st.utilization(st.mlp);

        if (metrics_path) {
            nlohmann::json doc = {
                {"total_cycles", st.total_cycles},
                {"dram_bytes_read", st.dram_bytes_read},
                {"samples", st.samples},
                {"mlp_samples", st.mlp_samples},
                {"batches", st.batches},
                {"stall_dram_cycles", st.stall_dram_cycles},
                {"stall_buffer_cycles", st.stall_buffer_cycles},
                {"gid_busy_cycles", st.gid.busy_cycles},
                {"blu_busy_cycles", st.blu.busy_cycles},
                {"hmu_busy_cycles", st.hmu.busy_cycles},
                {"tiu_busy_cycles", st.tiu.busy_cycles},
                {"mlp_busy_cycles", st.mlp.busy_cycles},
                {"dram_busy_cycles", st.dram.busy_cycles},
                {"fps", st.fps},
            };
            write_metrics(doc, metrics_path);
        }
        return SPNERF_OK;
    });
}

} // extern "C"
