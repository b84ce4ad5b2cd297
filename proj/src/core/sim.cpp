#include "sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "io.hpp"

namespace spnerf {

std::uint64_t systolic_cycles(std::uint64_t m, std::uint64_t k, std::uint64_t n, std::uint64_t r,
                              std::uint64_t c) {
    const std::uint64_t tiles = ((m + r - 1) / r) * ((n + c - 1) / c);
    const std::uint64_t tile_cost = k + r + c - 2;
    const std::uint64_t credit = std::min(k, r + c - 2);
    return tiles * tile_cost - (tiles - 1) * credit;
}

BlockCirculantBuffer::BlockCirculantBuffer(std::uint32_t rows)
    : rows_(rows), store_(static_cast<std::size_t>(kBanks) * rows * kBlock, 0.0f) {}

void BlockCirculantBuffer::write(std::uint32_t row, std::span<const float, kMlpIn> values) {
    for (int block = 0; block < kBanks; ++block) {
        const int bank = (block + static_cast<int>(row)) % kBanks;
        float* dst = &store_[(static_cast<std::size_t>(bank) * rows_ + row) * kBlock];
        for (int e = 0; e < kBlock; ++e) dst[e] = values[block * kBlock + e];
    }
}

std::array<float, kMlpIn> BlockCirculantBuffer::read(std::uint32_t row,
                                                     std::array<int, kBanks>* banks_touched) const {
    std::array<float, kMlpIn> out;
    for (int block = 0; block < kBanks; ++block) {
        const int bank = (block + static_cast<int>(row)) % kBanks; // rotate left by row
        if (banks_touched) (*banks_touched)[block] = bank;
        const float* src = &store_[(static_cast<std::size_t>(bank) * rows_ + row) * kBlock];
        for (int e = 0; e < kBlock; ++e) out[block * kBlock + e] = src[e];
    }
    return out;
}

namespace {

std::uint64_t bitmap_slice_bytes(const SceneBundle& b) {
    return (static_cast<std::uint64_t>(b.subgrid_width) * b.dims.y * b.dims.z + 7) / 8;
}

std::uint64_t table_stream_bytes(const SceneBundle& b) {
    // 4 B packed 18-bit index + 2 B half density per entry
    return static_cast<std::uint64_t>(b.table_size) * 6;
}

std::uint64_t codebook_bytes() {
    return static_cast<std::uint64_t>(kCodebookRows) * kFeatureDim * 2;
}

} // namespace

std::uint64_t frame_dram_bytes(const SceneBundle& bundle, const FrameTrace& trace) {
    std::uint64_t bytes = 0;
    bool any_mlp = false;
    for (const auto& s : trace.samples) any_mlp |= s.needs_mlp != 0;
    if (any_mlp) bytes += mlp_weight_bytes();
    if (trace.any_codebook_hit) bytes += codebook_bytes();
    for (std::uint32_t k : trace.touched_subgrids) {
        bytes += table_stream_bytes(bundle) + bitmap_slice_bytes(bundle);
        auto it = trace.true_rows.find(k);
        if (it != trace.true_rows.end())
            bytes += static_cast<std::uint64_t>(it->second.size()) * kFeatureDim;
    }
    return bytes;
}

SimResult simulate_frame(const SceneBundle& bundle, const Camera& cam, const RenderConfig& rcfg,
                         const SimConfig& scfg) {
    // feasibility: two resident subgrid slots plus the prefetch shadow, with
    // on-chip entries packed to 18+16 bits
    const std::uint64_t entry_bits = 34;
    const std::uint64_t slot_bytes =
        (static_cast<std::uint64_t>(bundle.table_size) * entry_bits + 7) / 8 +
        bitmap_slice_bytes(bundle);
    if (codebook_bytes() + 3 * slot_bytes > scfg.sgpu_sram_bytes)
        throw InfeasibleConfigError("subgrid working set exceeds SGPU SRAM");
    const std::uint64_t mlp_io_bytes =
        2ull * (64ull * kMlpIn * 2 + 64ull * kMlpOut * 2); // double-buffered in/out
    if (mlp_weight_bytes() + mlp_io_bytes > scfg.mlp_sram_bytes)
        throw InfeasibleConfigError("MLP weights and buffers exceed MLP SRAM");

    FrameTrace trace;
    SimResult result;
    result.image = render_image(bundle, cam, rcfg, &trace);

    SimStats& st = result.stats;
    st.samples = trace.samples.size();

    const std::uint64_t fill = scfg.sgpu_fill();
    const std::uint64_t ii = scfg.sgpu_issue_interval();
    const std::uint64_t batch_cycles =
        systolic_cycles(64, kMlpIn, kMlpHidden, scfg.systolic_rows, scfg.systolic_cols) +
        systolic_cycles(64, kMlpHidden, kMlpHidden, scfg.systolic_rows, scfg.systolic_cols) +
        systolic_cycles(64, kMlpHidden, kMlpOut, scfg.systolic_rows, scfg.systolic_cols) +
        scfg.output_drain;

    auto dram_time = [&](std::uint64_t bytes) -> std::uint64_t {
        if (scfg.assume_preloaded || bytes == 0) return 0;
        double cycles = static_cast<double>(bytes) * scfg.clock_hz / scfg.dram_bandwidth;
        return scfg.dram_fixed_latency + static_cast<std::uint64_t>(std::ceil(cycles));
    };

    // group samples by base subgrid, ascending, stable within a group
    std::map<std::uint32_t, std::vector<const FrameTrace::Sample*>> groups;
    for (const auto& s : trace.samples) groups[s.base_subgrid].push_back(&s);

    bool any_mlp = false;
    for (const auto& s : trace.samples) any_mlp |= s.needs_mlp != 0;

    const std::uint64_t global_bytes = (any_mlp ? mlp_weight_bytes() : 0) +
                                       (trace.any_codebook_hit ? codebook_bytes() : 0);
    st.dram_bytes_read = scfg.assume_preloaded ? 0 : frame_dram_bytes(bundle, trace);

    // DRAM transfer schedule: global data first, then subgrids ascending
    std::map<std::uint32_t, std::uint64_t> fetch_cost;
    {
        std::vector<std::uint32_t> order(trace.touched_subgrids.begin(),
                                         trace.touched_subgrids.end());
        std::sort(order.begin(), order.end());
        for (std::uint32_t k : order) {
            std::uint64_t bytes = table_stream_bytes(bundle) + bitmap_slice_bytes(bundle);
            auto it = trace.true_rows.find(k);
            if (it != trace.true_rows.end())
                bytes += static_cast<std::uint64_t>(it->second.size()) * kFeatureDim;
            fetch_cost[k] = dram_time(bytes);
        }
    }
    const std::uint64_t global_cost = dram_time(global_bytes);
    st.dram.busy_cycles = global_cost;
    for (const auto& [k, c] : fetch_cost) st.dram.busy_cycles += c;
    st.dram.processed = 1 + fetch_cost.size();

    // prefetch completion chain (double-buffered mode)
    std::map<std::uint32_t, std::uint64_t> prefetch_done;
    {
        std::uint64_t t = global_cost;
        for (const auto& [k, c] : fetch_cost) {
            t += c;
            prefetch_done[k] = t;
        }
    }

    std::uint64_t prev_exit = 0;   // TIU exit time of the previous sample
    std::uint64_t dram_free = global_cost;
    std::vector<std::uint64_t> mlp_end; // completion time per batch
    std::uint64_t mlp_free = 0;
    std::uint32_t batch_fill = 0;
    bool first_sample = true;

    std::vector<std::uint8_t> fetched_flag;

    auto is_fetched = [&](std::uint32_t k) {
        return k < fetched_flag.size() && fetched_flag[k];
    };
    auto mark_fetched = [&](std::uint32_t k) {
        if (k >= fetched_flag.size()) fetched_flag.resize(k + 1, 0);
        fetched_flag[k] = 1;
    };

    auto close_batch = [&](std::uint64_t ready) {
        std::uint64_t start = std::max(mlp_free, ready);
        mlp_free = start + batch_cycles;
        mlp_end.push_back(mlp_free);
        ++st.batches;
        batch_fill = 0;
    };

    for (const auto& [k, group] : groups) {
        // subgrids this chunk needs resident
        std::vector<std::uint32_t> needed;
        if (!is_fetched(k)) needed.push_back(k);
        for (const auto* s : group)
            if (s->high_subgrid != k && !is_fetched(s->high_subgrid) &&
                (needed.empty() || needed.back() != s->high_subgrid))
                needed.push_back(s->high_subgrid);

        std::uint64_t data_ready = first_sample ? global_cost : 0;
        if (scfg.double_buffering) {
            for (std::uint32_t j : needed) {
                data_ready = std::max(data_ready, prefetch_done[j]);
                mark_fetched(j);
            }
        } else {
            if (!needed.empty()) {
                std::uint64_t start = std::max(dram_free, prev_exit);
                for (std::uint32_t j : needed) {
                    start += fetch_cost[j];
                    mark_fetched(j);
                }
                dram_free = start;
                data_ready = std::max(data_ready, start);
            }
        }

        bool chunk_head = true;
        for (const auto* s : group) {
            std::uint64_t exit;
            if (first_sample) {
                exit = std::max(data_ready + fill, ii);
                first_sample = false;
            } else {
                exit = prev_exit + ii;
                if (chunk_head && data_ready + fill > exit) {
                    st.stall_dram_cycles += data_ready + fill - exit;
                    exit = data_ready + fill;
                }
            }
            chunk_head = false;

            if (s->needs_mlp) {
                // double-buffered input: at most two batches may be open
                std::size_t batch_idx = mlp_end.size();
                if (batch_idx >= 2) {
                    std::uint64_t gate = mlp_end[batch_idx - 2];
                    if (gate > exit) {
                        st.stall_buffer_cycles += gate - exit;
                        exit = gate;
                    }
                }
                ++st.mlp_samples;
                if (++batch_fill == 64) close_batch(exit);
            }
            prev_exit = exit;
        }
    }
    if (batch_fill > 0) close_batch(prev_exit);

    st.gid.processed = st.blu.processed = st.hmu.processed = st.tiu.processed = st.samples;
    st.gid.busy_cycles = st.samples * scfg.gid_latency;
    st.blu.busy_cycles = st.samples * scfg.blu_latency;
    st.hmu.busy_cycles = st.samples * scfg.hmu_latency;
    st.tiu.busy_cycles = st.samples * scfg.tiu_latency;
    st.mlp.processed = st.mlp_samples;
    st.mlp.busy_cycles = st.batches * batch_cycles;

    st.total_cycles = std::max(prev_exit, mlp_free);
    if (st.total_cycles == 0) st.total_cycles = 1; // empty frame: a single idle cycle
    st.fps = scfg.clock_hz / static_cast<double>(st.total_cycles);
    return result;
}

} // namespace spnerf
