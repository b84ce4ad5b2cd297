#include "scene.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "grid.hpp"

namespace spnerf {

SceneShape scene_shape_from_string(const std::string& s) {
    if (s == "sphere") return SceneShape::Sphere;
    if (s == "torus") return SceneShape::Torus;
    if (s == "blobs") return SceneShape::Blobs;
    throw SpnerfError("unknown scene shape: " + s);
}

namespace {

struct Blob {
    float cx, cy, cz, r;
};

// distance of a vertex to the shape's surface (shell selection metric)
float surface_distance(SceneShape shape, float x, float y, float z,
                       const GridDims& d, const std::vector<Blob>& blobs) {
    float cx = 0.5f * static_cast<float>(d.x - 1);
    float cy = 0.5f * static_cast<float>(d.y - 1);
    float cz = 0.5f * static_cast<float>(d.z - 1);
    float m = static_cast<float>(std::min({d.x, d.y, d.z}));
    switch (shape) {
        case SceneShape::Sphere: {
            float r = 0.35f * m;
            float dist = std::sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy) + (z - cz) * (z - cz));
            return std::fabs(dist - r);
        }
        case SceneShape::Torus: {
            float R = 0.30f * m, r = 0.12f * m;
            float q = std::sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy)) - R;
            float dist = std::sqrt(q * q + (z - cz) * (z - cz));
            return std::fabs(dist - r);
        }
        case SceneShape::Blobs: {
            float best = 1e30f;
            for (const auto& b : blobs) {
                float dist = std::sqrt((x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy) +
                                       (z - b.cz) * (z - b.cz));
                best = std::min(best, std::fabs(dist - b.r));
            }
            return best;
        }
    }
    return 0.0f;
}

} // namespace

DenseGrid generate_scene(const SceneParams& params) {
    const GridDims d = params.dims;
    const std::uint64_t vol = d.volume();
    if (vol == 0) throw SpnerfError("empty grid dims");

    DenseGrid g;
    g.dims = d;
    g.density.assign(vol, 0.0f);
    g.features.assign(vol * kFeatureDim, 0.0f);

    const std::uint64_t target =
        static_cast<std::uint64_t>(std::llround(params.sparsity * static_cast<double>(vol)));
    if (target == 0) return g;

    std::mt19937_64 rng(params.seed);

    std::vector<Blob> blobs;
    if (params.shape == SceneShape::Blobs) {
        std::uniform_real_distribution<float> cdist(0.2f, 0.8f);
        std::uniform_real_distribution<float> rdist(0.08f, 0.2f);
        float m = static_cast<float>(std::min({d.x, d.y, d.z}));
        for (int i = 0; i < 5; ++i) {
            blobs.push_back({cdist(rng) * (d.x - 1), cdist(rng) * (d.y - 1),
                             cdist(rng) * (d.z - 1), rdist(rng) * m});
        }
    }

    // pick the `target` vertices nearest the surface; ties broken by index
    std::vector<std::pair<float, std::uint64_t>> rank(vol);
    std::uint64_t i = 0;
    for (std::uint32_t x = 0; x < d.x; ++x)
        for (std::uint32_t y = 0; y < d.y; ++y)
            for (std::uint32_t z = 0; z < d.z; ++z, ++i)
                rank[i] = {surface_distance(params.shape, static_cast<float>(x),
                                            static_cast<float>(y), static_cast<float>(z), d, blobs),
                           i};
    std::nth_element(rank.begin(), rank.begin() + static_cast<std::ptrdiff_t>(target) - 1,
                     rank.end());
    rank.resize(target);
    std::sort(rank.begin(), rank.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });

    const Codebook cb = make_default_codebook();

    // which of the selected vertices carry raw high-norm features
    const std::uint64_t n_raw =
        static_cast<std::uint64_t>(std::llround(params.raw_fraction * static_cast<double>(target)));
    std::vector<std::uint64_t> order(target);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::uint8_t> is_raw(target, 0);
    for (std::uint64_t k = 0; k < n_raw && k < target; ++k) is_raw[order[k]] = 1;

    std::uniform_int_distribution<std::uint32_t> row_dist(0, kCodebookRows - 1);
    std::uniform_real_distribution<float> dens_dist(0.5f, 2.0f);
    std::uniform_real_distribution<float> raw_mag(1.5f, 3.0f);

    for (std::uint64_t k = 0; k < target; ++k) {
        std::uint64_t vi = rank[k].second;
        float* f = &g.features[vi * kFeatureDim];
        if (is_raw[k]) {
            // per-component magnitude in [1.5, 3): norm well above any
            // codebook row, so the keep-set selection picks exactly these
            for (int c = 0; c < kFeatureDim; ++c) {
                float v = raw_mag(rng);
                if (rng() & 1u) v = -v;
                f[c] = v;
            }
        } else {
            std::uint32_t row = row_dist(rng);
            for (int c = 0; c < kFeatureDim; ++c) f[c] = cb.at(row, c);
        }
        // half-representable so the hash-table density round-trips exactly
        g.density[vi] = half_round(dens_dist(rng));
    }
    return g;
}

} // namespace spnerf
