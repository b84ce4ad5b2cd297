#include "decode.hpp"

namespace spnerf {

Feature unified_fetch(const SceneBundle& bundle, std::uint32_t index) {
    Feature f{};
    if (index < kCodebookRows) {
        for (int c = 0; c < kFeatureDim; ++c) f[c] = bundle.codebook.at(index, c);
        return f;
    }
    const std::uint32_t row = index - kCodebookRows;
    if (row >= bundle.true_grid.rows())
        throw CorruptFileError("unified index beyond true voxel grid");
    const std::int8_t* v = &bundle.true_grid.values[static_cast<std::size_t>(row) * kFeatureDim];
    const float s = half_round(bundle.true_grid.scale); // scale factor lives on-chip in FP16
    for (int c = 0; c < kFeatureDim; ++c)
        f[c] = hmul(s, static_cast<float>(v[c]));
    return f;
}

VertexData fetch_vertex(const SceneBundle& bundle, const Position3& p, bool masked) {
    VertexData out;
    if (masked && !bundle.bitmap.get(p)) return out; // exact zeros
    const std::uint32_t k = p.x / bundle.subgrid_width;
    const HashTable& t = bundle.tables[k];
    const std::uint32_t slot = hash_index(p, t.entries);
    out.feature = unified_fetch(bundle, t.index[slot]);
    out.density = t.density[slot].to_float();
    return out;
}

} // namespace spnerf
