#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "half.hpp"

namespace spnerf {

inline constexpr int kFeatureDim = 12;
inline constexpr std::uint32_t kCodebookRows = 4096;
// 18-bit unified address space: indices < 4096 hit the codebook, the rest
// address the true voxel grid.
inline constexpr std::uint32_t kMaxKeep = (1u << 18) - kCodebookRows;

struct GridDims {
    std::uint32_t x = 0, y = 0, z = 0;
    std::uint64_t volume() const {
        return static_cast<std::uint64_t>(x) * y * z;
    }
    bool operator==(const GridDims&) const = default;
};

struct Position3 {
    std::uint32_t x = 0, y = 0, z = 0;
    bool operator==(const Position3&) const = default;
    // lexicographic (x, y, z)
    bool operator<(const Position3& o) const {
        if (x != o.x) return x < o.x;
        if (y != o.y) return y < o.y;
        return z < o.z;
    }
};

struct SamplePoint {
    float x = 0, y = 0, z = 0;   // continuous grid-space coordinates
    float dx = 0, dy = 0, dz = 1; // unit view direction
};

using Feature = std::array<float, kFeatureDim>;

// Reference voxel grid: per-vertex pre-activation density plus a 12-dim
// color feature vector. Linear index is x-major: ((x*Dy)+y)*Dz+z.
struct DenseGrid {
    GridDims dims;
    std::vector<float> density;   // volume() entries
    std::vector<float> features;  // volume()*12 entries

    std::uint64_t index_of(const Position3& p) const {
        return (static_cast<std::uint64_t>(p.x) * dims.y + p.y) * dims.z + p.z;
    }
    bool nonzero_at(const Position3& p) const {
        std::uint64_t i = index_of(p);
        if (density[i] != 0.0f) return true;
        const float* f = &features[i * kFeatureDim];
        for (int c = 0; c < kFeatureDim; ++c)
            if (f[c] != 0.0f) return true;
        return false;
    }
};

struct Codebook {
    // 4096 rows x 12 half-precision components, row-major.
    std::vector<Half> entries;

    float at(std::uint32_t row, int c) const {
        return entries[static_cast<std::size_t>(row) * kFeatureDim + c].to_float();
    }
};

struct TrueVoxelGrid {
    std::vector<std::int8_t> values; // N_keep x 12
    float scale = 1.0f;

    std::uint32_t rows() const {
        return static_cast<std::uint32_t>(values.size() / kFeatureDim);
    }
};

struct HashTable {
    std::uint32_t entries = 0;          // T, power of two
    std::vector<std::uint32_t> index;   // T entries, each < 2^18
    std::vector<Half> density;          // T entries
};

struct Bitmap {
    GridDims dims;
    std::vector<std::uint8_t> bits; // packed, x-major bit order

    bool get(const Position3& p) const {
        std::uint64_t i = (static_cast<std::uint64_t>(p.x) * dims.y + p.y) * dims.z + p.z;
        return (bits[i >> 3] >> (i & 7)) & 1u;
    }
    void set(const Position3& p) {
        std::uint64_t i = (static_cast<std::uint64_t>(p.x) * dims.y + p.y) * dims.z + p.z;
        bits[i >> 3] |= static_cast<std::uint8_t>(1u << (i & 7));
    }
};

inline constexpr int kMlpHidden = 128;
inline constexpr int kMlpIn = 40;       // 39 real inputs + one zero pad
inline constexpr int kMlpRealIn = 39;   // 12 features + 27 direction values
inline constexpr int kMlpOut = 3;

struct MlpWeights {
    // row-major [out][in]
    std::vector<Half> w1; // 128 x 40
    std::vector<Half> b1; // 128
    std::vector<Half> w2; // 128 x 128
    std::vector<Half> b2; // 128
    std::vector<Half> w3; // 3 x 128
    std::vector<Half> b3; // 3
};

struct CollisionStats {
    std::uint64_t collisions = 0; // nonzero-nonzero: later point found its slot claimed
    std::vector<std::uint64_t> subgrid_points; // |S_k|
    std::vector<Position3> victims;            // points whose data was dropped
};

struct SceneBundle {
    GridDims dims;
    std::uint32_t subgrid_count = 0; // K
    std::uint32_t table_size = 0;    // T
    std::uint32_t subgrid_width = 0; // w = ceil(Dx / K)
    std::vector<HashTable> tables;   // K tables
    Bitmap bitmap;
    Codebook codebook;
    TrueVoxelGrid true_grid;
    MlpWeights mlp;
    CollisionStats collision_stats;  // construction-time, not persisted
};

struct SpnerfError : std::runtime_error {
    explicit SpnerfError(const std::string& msg) : std::runtime_error(msg) {}
};
struct IoError : SpnerfError {
    using SpnerfError::SpnerfError;
};
struct CorruptFileError : SpnerfError {
    using SpnerfError::SpnerfError;
};
struct CapacityError : SpnerfError {
    using SpnerfError::SpnerfError;
};
struct InfeasibleConfigError : SpnerfError {
    using SpnerfError::SpnerfError;
};

} // namespace spnerf
