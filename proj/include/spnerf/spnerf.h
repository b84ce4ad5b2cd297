/* SpNeRF C API: sparse voxel-grid encoding, bitmap-masked decoding, reference
 * rendering, and cycle-level accelerator simulation behind opaque handles.
 * All functions return a spnerf_status; outputs are written through pointers.
 * Handles are freed with the matching *_free call. Error details for the most
 * recent failure on the calling thread are available via spnerf_last_error().
 */
#ifndef SPNERF_H
#define SPNERF_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum spnerf_status {
    SPNERF_OK = 0,
    SPNERF_ERR_INVALID_ARG = 1,
    SPNERF_ERR_IO = 2,
    SPNERF_ERR_CORRUPT = 3,
    SPNERF_ERR_CAPACITY = 4,
    SPNERF_ERR_INFEASIBLE = 5,
    SPNERF_ERR_INTERNAL = 6
} spnerf_status;

const char* spnerf_status_name(spnerf_status status);
/* message for the last failing call on this thread; empty string if none */
const char* spnerf_last_error(void);

typedef struct spnerf_grid spnerf_grid;
typedef struct spnerf_bundle spnerf_bundle;
typedef struct spnerf_camera spnerf_camera;
typedef struct spnerf_image spnerf_image;

/* ---- dense grids ---- */

typedef enum spnerf_shape {
    SPNERF_SHAPE_SPHERE = 0,
    SPNERF_SHAPE_TORUS = 1,
    SPNERF_SHAPE_BLOBS = 2
} spnerf_shape;

spnerf_status spnerf_grid_generate(const uint32_t dims[3], double sparsity, spnerf_shape shape,
                                   uint64_t seed, spnerf_grid** out);
spnerf_status spnerf_grid_load(const char* path, spnerf_grid** out);
spnerf_status spnerf_grid_save(const spnerf_grid* grid, const char* path);
spnerf_status spnerf_grid_dims(const spnerf_grid* grid, uint32_t dims[3]);
spnerf_status spnerf_grid_sparsity(const spnerf_grid* grid, double* out);
void spnerf_grid_free(spnerf_grid* grid);

/* ---- encoding ---- */

typedef struct spnerf_encode_params {
    uint32_t subgrids;      /* K, default 64 */
    uint32_t table_size;    /* T, power of two >= 1024, default 32768 */
    double keep_fraction;   /* default 0.01 */
    double quant_percentile; /* default 99.9 */
} spnerf_encode_params;

void spnerf_encode_params_default(spnerf_encode_params* params);

typedef struct spnerf_bundle_stats {
    uint64_t nonzero_points;
    uint64_t collisions;      /* nonzero-nonzero */
    uint64_t kept_points;     /* true-grid rows */
    uint64_t encoded_bytes;   /* full container size */
    uint64_t dense_bytes;
    double reduction_ratio;   /* dense / encoded grid payload, MLP excluded */
    double max_load_factor;   /* max_k |S_k| / T */
} spnerf_bundle_stats;

spnerf_status spnerf_encode(const spnerf_grid* grid, const spnerf_encode_params* params,
                            spnerf_bundle** out);
spnerf_status spnerf_bundle_write(const spnerf_bundle* bundle, const char* path);
spnerf_status spnerf_bundle_read(const char* path, spnerf_bundle** out);
/* construction-time collision stats are only present on freshly encoded bundles */
spnerf_status spnerf_bundle_stats_get(const spnerf_bundle* bundle, spnerf_bundle_stats* out);
void spnerf_bundle_free(spnerf_bundle* bundle);

/* ---- cameras ---- */

spnerf_status spnerf_camera_create(const double position[3], const double look_at[3],
                                   const double up[3], double focal, uint32_t width,
                                   uint32_t height, spnerf_camera** out);
spnerf_status spnerf_camera_load(const char* path, spnerf_camera** out);
void spnerf_camera_free(spnerf_camera* camera);

/* ---- rendering ---- */

typedef struct spnerf_render_params {
    double step;            /* ray-march interval in grid units, default 0.5 */
    double near_clip;
    double far_clip;
    double density_shift;
    int white_background;
    int use_masking;        /* 0 exposes hash-collision artifacts (ablation) */
} spnerf_render_params;

void spnerf_render_params_default(spnerf_render_params* params);

spnerf_status spnerf_render(const spnerf_bundle* bundle, const spnerf_camera* camera,
                            const spnerf_render_params* params, spnerf_image** out);
/* dense-grid reference render through the same pipeline (bundle supplies the MLP) */
spnerf_status spnerf_render_reference(const spnerf_grid* grid, const spnerf_bundle* bundle,
                                      const spnerf_camera* camera,
                                      const spnerf_render_params* params, spnerf_image** out);
spnerf_status spnerf_image_size(const spnerf_image* image, uint32_t* width, uint32_t* height);
/* row-major H*W*3 floats in [0,1]; pointer valid until the image is freed */
spnerf_status spnerf_image_data(const spnerf_image* image, const float** data);
spnerf_status spnerf_image_write_ppm(const spnerf_image* image, const char* path);
/* dB; identical images yield +infinity */
spnerf_status spnerf_psnr(const spnerf_image* a, const spnerf_image* b, double* out);
void spnerf_image_free(spnerf_image* image);

/* ---- accelerator simulation ---- */

typedef struct spnerf_sim_params {
    double clock_hz;          /* default 1e9 */
    double dram_bandwidth;    /* bytes/s, default 59.7e9 */
    uint32_t dram_fixed_latency;
    uint32_t systolic_rows;
    uint32_t systolic_cols;
    uint32_t gid_latency, blu_latency, hmu_latency, tiu_latency;
    uint32_t output_drain;
    uint64_t sgpu_sram_bytes;
    uint64_t mlp_sram_bytes;
    int double_buffering;
    int assume_preloaded;
} spnerf_sim_params;

void spnerf_sim_params_default(spnerf_sim_params* params);

typedef struct spnerf_sim_stats {
    uint64_t total_cycles;
    uint64_t dram_bytes_read;
    uint64_t samples;
    uint64_t mlp_samples;
    uint64_t batches;
    uint64_t stall_dram_cycles;
    uint64_t stall_buffer_cycles;
    double fps;
    double sgpu_utilization; /* TIU busy / total */
    double mlp_utilization;
} spnerf_sim_stats;

/* Runs the cycle model; the functional pixel output is verified bit-identical
 * to spnerf_render before stats are reported. metrics_path may be NULL. */
spnerf_status spnerf_simulate(const spnerf_bundle* bundle, const spnerf_camera* camera,
                              const spnerf_render_params* render_params,
                              const spnerf_sim_params* sim_params, const char* metrics_path,
                              spnerf_sim_stats* out);

#ifdef __cplusplus
}
#endif

#endif /* SPNERF_H */
