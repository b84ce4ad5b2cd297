#pragma once

#include <array>
#include <cstdint>

#include "encode.hpp"
#include "types.hpp"

namespace spnerf {

struct VertexData {
    Feature feature{}; // half-representable values
    float density = 0.0f;
};

// Resolve a unified 18-bit index: codebook row below 4096, dequantized
// true-grid row (scale applied in half precision) otherwise.
Feature unified_fetch(const SceneBundle& bundle, std::uint32_t index);

// Bitmap-masked vertex decode. Vertices with bitmap bit 0 are exact zeros
// regardless of what the hash slot holds; pass masked=false only for the
// ablation path.
VertexData fetch_vertex(const SceneBundle& bundle, const Position3& p, bool masked = true);

} // namespace spnerf
