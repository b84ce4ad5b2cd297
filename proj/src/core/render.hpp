#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "decode.hpp"
#include "types.hpp"

namespace spnerf {

struct Camera {
    std::array<float, 3> position{0, 0, 0};
    std::array<std::array<float, 3>, 3> rotation{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; // camera-to-world
    float focal = 64.0f; // pixels
    std::uint32_t width = 64, height = 64;
};

Camera make_lookat_camera(const std::array<float, 3>& position,
                          const std::array<float, 3>& look_at, const std::array<float, 3>& up,
                          float focal, std::uint32_t width, std::uint32_t height);

struct RenderConfig {
    float step = 0.5f;           // delta, grid units
    float near_clip = 0.0f;
    float far_clip = 1e9f;
    float density_shift = 0.0f;  // b in the density activation
    bool white_background = false;
    bool use_masking = true;     // false only for the ablation path
    bool skip_zero = true;       // skip MLP when all 8 corner bits are 0
};

struct Image {
    std::uint32_t width = 0, height = 0;
    std::vector<float> rgb; // H*W*3, row-major, values in [0,1]

    float* pixel(std::uint32_t x, std::uint32_t y) {
        return &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
    }
    const float* pixel(std::uint32_t x, std::uint32_t y) const {
        return &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
    }
};

struct Ray {
    std::array<float, 3> origin;
    std::array<float, 3> dir; // unit
};

struct Aabb {
    std::array<float, 3> lo, hi;
};

Ray camera_ray(const Camera& cam, std::uint32_t px, std::uint32_t py);
Aabb grid_aabb(const GridDims& dims);

std::vector<SamplePoint> sample_ray(const Ray& ray, const Aabb& box, const RenderConfig& cfg);

// trilinear weight of one enclosing cell corner, stored as an FP16 value
float interp_weight(const SamplePoint& s, const Position3& vertex);

struct InterpResult {
    Feature feature{};
    float density = 0.0f;
    bool all_corners_zero = true; // every corner bitmap bit is 0
};

InterpResult trilinear_fetch(const SceneBundle& bundle, const SamplePoint& s, bool masked = true);
InterpResult trilinear_fetch_dense(const DenseGrid& grid, const Bitmap& bitmap,
                                   const SamplePoint& s);

// 27 values: raw direction plus 4-frequency sin/cos encoding
std::array<float, 27> encode_viewdir(float dx, float dy, float dz);

std::array<float, 3> mlp_forward(const std::array<float, kMlpRealIn>& input,
                                 const MlpWeights& weights);

struct CompositeSample {
    std::array<float, 3> rgb{0, 0, 0};
    float density = 0.0f;
};

std::array<float, 3> composite(const std::vector<CompositeSample>& samples,
                               const RenderConfig& cfg);

// density activation used by composite: exactly 0 at sigma == 0 so that
// zero vertices are exactly transparent (required for the skip-zero path
// to be bit-exact)
float density_activation(float sigma, float shift);

// Per-sample record consumed by the cycle-level simulator.
struct FrameTrace {
    struct Sample {
        std::uint32_t base_subgrid = 0; // slab of the lower corner
        std::uint32_t high_subgrid = 0; // slab of the upper corner
        std::uint8_t needs_mlp = 0;
    };
    std::vector<Sample> samples; // issue order (pixel-major, front to back)
    std::unordered_set<std::uint32_t> touched_subgrids;
    std::unordered_map<std::uint32_t, std::unordered_set<std::uint32_t>> true_rows; // per subgrid
    bool any_codebook_hit = false;
};

Image render_image(const SceneBundle& bundle, const Camera& cam, const RenderConfig& cfg,
                   FrameTrace* trace = nullptr);

// dense-grid oracle sharing the whole pipeline except the vertex fetch path
Image render_image_dense(const DenseGrid& grid, const MlpWeights& mlp, const Camera& cam,
                         const RenderConfig& cfg);

// dB; +inf for identical images
double psnr(const Image& a, const Image& b);

unsigned render_thread_count();

} // namespace spnerf
