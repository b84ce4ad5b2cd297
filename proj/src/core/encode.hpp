#pragma once

#include <cstdint>
#include <vector>

#include "types.hpp"

namespace spnerf {

struct EncodeConfig {
    std::uint32_t subgrid_count = 64;   // K
    std::uint32_t table_size = 32768;   // T, power of two >= 1024
    double keep_fraction = 0.01;        // fraction of non-zero voxels stored raw
    double quant_percentile = 99.9;     // percentile of |feature| defining the INT8 scale
};

// Spatial hash of Instant-NGP lineage: 32-bit wraparound multiplies, XOR,
// then mod T (T a power of two).
inline std::uint32_t hash_index(const Position3& p, std::uint32_t table_size) {
    std::uint32_t h = (p.x * 1u) ^ (p.y * 2654435761u) ^ (p.z * 805459861u);
    return h & (table_size - 1);
}

inline std::uint32_t subgrid_width(std::uint32_t dim_x, std::uint32_t k) {
    return (dim_x + k - 1) / k; // ceil
}

// Slab partition by x: S_k = { p : floor(x / w) == k }, order preserved.
std::vector<std::vector<Position3>> partition_subgrids(const std::vector<Position3>& nz,
                                                       std::uint32_t subgrid_count,
                                                       const GridDims& dims);

struct IndexAssignment {
    std::vector<std::uint32_t> index_of; // parallel to the non-zero set, 18-bit values
    TrueVoxelGrid true_grid;
};

// Keep the top keep_fraction of non-zero voxels by feature L2 norm in the
// INT8 true grid (indices 4096+i in input order); map the rest to their
// nearest codebook row.
IndexAssignment assign_indices(const DenseGrid& grid, const std::vector<Position3>& nz,
                               double keep_fraction, double quant_percentile,
                               const Codebook& codebook);

std::vector<HashTable> build_tables(const std::vector<std::vector<Position3>>& subgrids,
                                    const DenseGrid& grid, const std::vector<Position3>& nz,
                                    const std::vector<std::uint32_t>& index_of,
                                    std::uint32_t table_size, CollisionStats* stats);

SceneBundle encode(const DenseGrid& grid, const MlpWeights& mlp, const EncodeConfig& cfg);

} // namespace spnerf
