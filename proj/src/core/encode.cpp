#include "encode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "grid.hpp"

namespace spnerf {

std::vector<std::vector<Position3>> partition_subgrids(const std::vector<Position3>& nz,
                                                       std::uint32_t subgrid_count,
                                                       const GridDims& dims) {
    if (subgrid_count == 0) throw SpnerfError("subgrid count must be >= 1");
    const std::uint32_t w = subgrid_width(dims.x, subgrid_count);
    std::vector<std::vector<Position3>> out(subgrid_count);
    for (const auto& p : nz) out[p.x / w].push_back(p);
    return out;
}

IndexAssignment assign_indices(const DenseGrid& grid, const std::vector<Position3>& nz,
                               double keep_fraction, double quant_percentile,
                               const Codebook& codebook) {
    const std::size_t n = nz.size();
    IndexAssignment out;
    out.index_of.assign(n, 0);
    out.true_grid.scale = 1.0f;

    const std::size_t n_keep =
        std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(keep_fraction * static_cast<double>(n))));
    if (n_keep > kMaxKeep) throw CapacityError("keep set exceeds 18-bit address space");

    // top n_keep by feature L2 norm, ties to the earlier (lexicographic) point
    std::vector<std::uint8_t> kept(n, 0);
    if (n_keep > 0) {
        std::vector<std::pair<float, std::size_t>> norms(n);
        for (std::size_t i = 0; i < n; ++i) {
            const float* f = &grid.features[grid.index_of(nz[i]) * kFeatureDim];
            float s = 0.0f;
            for (int c = 0; c < kFeatureDim; ++c) s += f[c] * f[c];
            norms[i] = {s, i};
        }
        std::sort(norms.begin(), norms.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t i = 0; i < n_keep; ++i) kept[norms[i].second] = 1;
    }

    // single symmetric INT8 scale from the percentile of |feature| over kept voxels
    std::vector<float> mags;
    mags.reserve(n_keep * kFeatureDim);
    for (std::size_t i = 0; i < n; ++i) {
        if (!kept[i]) continue;
        const float* f = &grid.features[grid.index_of(nz[i]) * kFeatureDim];
        for (int c = 0; c < kFeatureDim; ++c) mags.push_back(std::fabs(f[c]));
    }
    if (!mags.empty()) {
        std::sort(mags.begin(), mags.end());
        std::size_t idx = static_cast<std::size_t>(
            std::ceil(quant_percentile / 100.0 * static_cast<double>(mags.size() - 1)));
        idx = std::min(idx, mags.size() - 1);
        float ref = mags[idx];
        out.true_grid.scale = ref > 0.0f ? ref / 127.0f : 1.0f;
    }

    // codebook rows as float plus squared norms for the nearest-row search
    std::vector<float> rows(static_cast<std::size_t>(kCodebookRows) * kFeatureDim);
    std::vector<float> row_norm2(kCodebookRows);
    for (std::uint32_t r = 0; r < kCodebookRows; ++r) {
        float s = 0.0f;
        for (int c = 0; c < kFeatureDim; ++c) {
            float v = codebook.at(r, c);
            rows[static_cast<std::size_t>(r) * kFeatureDim + c] = v;
            s += v * v;
        }
        row_norm2[r] = s;
    }

    out.true_grid.values.reserve(n_keep * kFeatureDim);
    std::uint32_t next_keep = 0;
    const float inv_scale = 1.0f / out.true_grid.scale;
    for (std::size_t i = 0; i < n; ++i) {
        const float* f = &grid.features[grid.index_of(nz[i]) * kFeatureDim];
        if (kept[i]) {
            out.index_of[i] = kCodebookRows + next_keep++;
            for (int c = 0; c < kFeatureDim; ++c) {
                long q = std::lround(f[c] * inv_scale);
                q = std::clamp<long>(q, -127, 127);
                out.true_grid.values.push_back(static_cast<std::int8_t>(q));
            }
        } else {
            // argmin_r (|r|^2 - 2 f.r), strictly-less keeps the lowest row on ties
            std::uint32_t best_row = 0;
            float best = 1e30f;
            const float* row = rows.data();
            for (std::uint32_t r = 0; r < kCodebookRows; ++r, row += kFeatureDim) {
                float dot = 0.0f;
                for (int c = 0; c < kFeatureDim; ++c) dot += f[c] * row[c];
                float score = row_norm2[r] - 2.0f * dot;
                if (score < best) {
                    best = score;
                    best_row = r;
                }
            }
            out.index_of[i] = best_row;
        }
    }
    return out;
}

std::vector<HashTable> build_tables(const std::vector<std::vector<Position3>>& subgrids,
                                    const DenseGrid& grid, const std::vector<Position3>& nz,
                                    const std::vector<std::uint32_t>& index_of,
                                    std::uint32_t table_size, CollisionStats* stats) {
    (void)nz;
    std::vector<HashTable> tables(subgrids.size());
    if (stats) {
        stats->collisions = 0;
        stats->victims.clear();
        stats->subgrid_points.assign(subgrids.size(), 0);
    }
    // subgrids concatenated in k order enumerate the non-zero set in its
    // original lexicographic order (partition key is a prefix of the sort key)
    std::size_t running = 0;
    for (std::size_t k = 0; k < subgrids.size(); ++k) {
        HashTable& t = tables[k];
        t.entries = table_size;
        t.index.assign(table_size, 0);
        t.density.assign(table_size, Half(0.0f));
        std::vector<std::uint8_t> claimed(table_size, 0);
        if (stats) stats->subgrid_points[k] = subgrids[k].size();
        for (const auto& p : subgrids[k]) {
            const std::uint32_t slot = hash_index(p, table_size);
            if (claimed[slot]) {
                if (stats) {
                    ++stats->collisions;
                    stats->victims.push_back(p);
                }
            } else {
                claimed[slot] = 1;
                t.index[slot] = index_of[running];
                t.density[slot] = Half(grid.density[grid.index_of(p)]);
            }
            ++running;
        }
    }
    return tables;
}

SceneBundle encode(const DenseGrid& grid, const MlpWeights& mlp, const EncodeConfig& cfg) {
    if (cfg.subgrid_count == 0) throw SpnerfError("subgrid count must be >= 1");
    if (cfg.table_size < 1024 || (cfg.table_size & (cfg.table_size - 1)) != 0)
        throw SpnerfError("table size must be a power of two >= 1024");
    if (cfg.keep_fraction < 0.0 || cfg.keep_fraction > 1.0)
        throw SpnerfError("keep fraction must lie in [0, 1]");
    if (grid.density.size() != grid.dims.volume() ||
        grid.features.size() != grid.dims.volume() * kFeatureDim)
        throw SpnerfError("grid payload does not match dims");

    SceneBundle b;
    b.dims = grid.dims;
    b.subgrid_count = cfg.subgrid_count;
    b.table_size = cfg.table_size;
    b.subgrid_width = subgrid_width(grid.dims.x, cfg.subgrid_count);
    b.codebook = make_default_codebook();
    b.mlp = mlp;

    const auto nz = nonzero_set(grid);
    b.bitmap = build_bitmap(grid.dims, nz);
    auto assignment =
        assign_indices(grid, nz, cfg.keep_fraction, cfg.quant_percentile, b.codebook);
    b.true_grid = std::move(assignment.true_grid);
    const auto subgrids = partition_subgrids(nz, cfg.subgrid_count, grid.dims);
    b.tables = build_tables(subgrids, grid, nz, assignment.index_of, cfg.table_size,
                            &b.collision_stats);
    return b;
}

} // namespace spnerf
