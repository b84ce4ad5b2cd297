#pragma once

#include <cstdint>
#include <vector>

#include "types.hpp"

namespace spnerf {

double sparsity(const DenseGrid& grid);

// Non-zero vertex positions in lexicographic (x,y,z) order.
std::vector<Position3> nonzero_set(const DenseGrid& grid);

Bitmap build_bitmap(const DenseGrid& grid);
Bitmap build_bitmap(const GridDims& dims, const std::vector<Position3>& nz);

// Canonical synthesized codebook / MLP weights, deterministic. The same
// codebook is used by the scene generator and the encoder so that
// codebook-quantized vertices round-trip exactly.
Codebook make_default_codebook();
MlpWeights make_default_mlp(std::uint64_t seed = 0x5bf00d);

// Largest feature L2 norm over codebook rows; the scene generator places
// "important" raw features strictly above this so the keep-set selection
// picks exactly those.
float codebook_max_norm(const Codebook& cb);

} // namespace spnerf
