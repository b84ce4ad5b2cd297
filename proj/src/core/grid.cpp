#include "grid.hpp"

#include <cmath>
#include <random>

namespace spnerf {

double sparsity(const DenseGrid& grid) {
    std::uint64_t vol = grid.dims.volume();
    if (vol == 0) return 0.0;
    std::uint64_t nz = 0;
    for (std::uint64_t i = 0; i < vol; ++i) {
        bool any = grid.density[i] != 0.0f;
        const float* f = &grid.features[i * kFeatureDim];
        for (int c = 0; c < kFeatureDim && !any; ++c) any = f[c] != 0.0f;
        nz += any;
    }
    return static_cast<double>(nz) / static_cast<double>(vol);
}

std::vector<Position3> nonzero_set(const DenseGrid& grid) {
    std::vector<Position3> out;
    // x-major linear order == lexicographic (x,y,z)
    std::uint64_t i = 0;
    for (std::uint32_t x = 0; x < grid.dims.x; ++x)
        for (std::uint32_t y = 0; y < grid.dims.y; ++y)
            for (std::uint32_t z = 0; z < grid.dims.z; ++z, ++i) {
                bool any = grid.density[i] != 0.0f;
                const float* f = &grid.features[i * kFeatureDim];
                for (int c = 0; c < kFeatureDim && !any; ++c) any = f[c] != 0.0f;
                if (any) out.push_back({x, y, z});
            }
    return out;
}

Bitmap build_bitmap(const GridDims& dims, const std::vector<Position3>& nz) {
    Bitmap bm;
    bm.dims = dims;
    bm.bits.assign((dims.volume() + 7) / 8, 0);
    for (const auto& p : nz) bm.set(p);
    return bm;
}

Bitmap build_bitmap(const DenseGrid& grid) {
    return build_bitmap(grid.dims, nonzero_set(grid));
}

Codebook make_default_codebook() {
    Codebook cb;
    cb.entries.resize(static_cast<std::size_t>(kCodebookRows) * kFeatureDim);
    std::mt19937 rng(0xc0debu);
    std::uniform_real_distribution<float> dist(-0.25f, 0.25f);
    for (auto& e : cb.entries) e = Half(dist(rng));
    return cb;
}

float codebook_max_norm(const Codebook& cb) {
    float best = 0.0f;
    for (std::uint32_t r = 0; r < kCodebookRows; ++r) {
        float s = 0.0f;
        for (int c = 0; c < kFeatureDim; ++c) {
            float v = cb.at(r, c);
            s += v * v;
        }
        best = std::max(best, s);
    }
    return std::sqrt(best);
}

MlpWeights make_default_mlp(std::uint64_t seed) {
    MlpWeights w;
    std::mt19937_64 rng(seed);
    auto fill = [&rng](std::vector<Half>& v, std::size_t n, float scale) {
        std::normal_distribution<float> dist(0.0f, scale);
        v.resize(n);
        for (auto& e : v) e = Half(dist(rng));
    };
    fill(w.w1, static_cast<std::size_t>(kMlpHidden) * kMlpIn, 0.35f);
    fill(w.b1, kMlpHidden, 0.1f);
    fill(w.w2, static_cast<std::size_t>(kMlpHidden) * kMlpHidden, 0.12f);
    fill(w.b2, kMlpHidden, 0.1f);
    fill(w.w3, static_cast<std::size_t>(kMlpOut) * kMlpHidden, 0.2f);
    fill(w.b3, kMlpOut, 0.1f);
    return w;
}

} // namespace spnerf
