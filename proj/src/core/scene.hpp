#pragma once

#include <cstdint>
#include <string>

#include "types.hpp"

namespace spnerf {

enum class SceneShape { Sphere, Torus, Blobs };

SceneShape scene_shape_from_string(const std::string& s);

struct SceneParams {
    GridDims dims{64, 64, 64};
    double sparsity = 0.03;        // target non-zero fraction
    SceneShape shape = SceneShape::Sphere;
    std::uint64_t seed = 1;
    // Fraction of non-zero vertices given raw (non-codebook) features with
    // large norm; these become the encoder's keep set. Must stay below the
    // encoder's keep_fraction for the codebook/true-grid split to be exact.
    double raw_fraction = 0.008;
};

// Deterministic procedural grid: exactly round(sparsity * volume) non-zero
// vertices, chosen as the vertices closest to the shape's surface. Features
// are exact codebook rows except for the raw_fraction high-norm vertices.
DenseGrid generate_scene(const SceneParams& params);

} // namespace spnerf
