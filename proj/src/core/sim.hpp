#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "render.hpp"
#include "types.hpp"

namespace spnerf {

struct SimConfig {
    double clock_hz = 1e9;
    double dram_bandwidth = 59.7e9;       // bytes/s, LPDDR4-3200 class
    std::uint32_t dram_fixed_latency = 100; // cycles per transfer
    std::uint32_t systolic_rows = 64;     // R, matches the MLP batch
    std::uint32_t systolic_cols = 16;     // C
    std::uint32_t gid_latency = 2;
    std::uint32_t blu_latency = 1;
    std::uint32_t hmu_latency = 2;
    std::uint32_t tiu_latency = 4;
    std::uint32_t output_drain = 8;       // activation + output writeback per batch
    std::uint64_t sgpu_sram_bytes = 571 * 1024;
    std::uint64_t mlp_sram_bytes = 58 * 1024;
    bool double_buffering = true;         // overlap next fetch with compute
    bool assume_preloaded = false;        // all data on-chip; DRAM costs nothing

    std::uint32_t sgpu_fill() const {
        return gid_latency + blu_latency + hmu_latency + tiu_latency;
    }
    std::uint32_t sgpu_issue_interval() const {
        return std::max({gid_latency, blu_latency, hmu_latency, tiu_latency});
    }
};

struct StageCounters {
    std::uint64_t processed = 0;
    std::uint64_t busy_cycles = 0;
};

struct SimStats {
    std::uint64_t total_cycles = 0;
    StageCounters gid, blu, hmu, tiu, mlp, dram;
    std::uint64_t stall_dram_cycles = 0;   // SGPU waiting on a fetch
    std::uint64_t stall_buffer_cycles = 0; // SGPU waiting on the MLP input buffer
    std::uint64_t dram_bytes_read = 0;
    std::uint64_t samples = 0;
    std::uint64_t mlp_samples = 0;
    std::uint64_t batches = 0;
    double fps = 0.0;

    double utilization(const StageCounters& s) const {
        return total_cycles ? static_cast<double>(s.busy_cycles) / static_cast<double>(total_cycles)
                            : 0.0;
    }
};

// Output-stationary systolic array cost: ceil(M/R)*ceil(N/C) tiles of
// K+R+C-2 cycles each, consecutive tiles overlapping by min(K, R+C-2).
std::uint64_t systolic_cycles(std::uint64_t m, std::uint64_t k, std::uint64_t n, std::uint64_t r,
                              std::uint64_t c);

// MLP input buffer with the bank-rotated layout: vector j's block i lives in
// bank (i + j) % 10 at row j; a read fetches row j of all banks in one
// access and rotates back.
class BlockCirculantBuffer {
public:
    static constexpr int kBanks = 10;
    static constexpr int kBlock = 4;

    explicit BlockCirculantBuffer(std::uint32_t rows);

    void write(std::uint32_t row, std::span<const float, kMlpIn> values);
    // banks_touched, when given, receives the bank servicing each of the 10
    // block reads (conflict-free means all distinct)
    std::array<float, kMlpIn> read(std::uint32_t row,
                                   std::array<int, kBanks>* banks_touched = nullptr) const;

private:
    std::uint32_t rows_;
    std::vector<float> store_; // [bank][row][block element]
};

// exact off-chip traffic for a frame's trace
std::uint64_t frame_dram_bytes(const SceneBundle& bundle, const FrameTrace& trace);

struct SimResult {
    SimStats stats;
    Image image; // bit-identical to render_image under the same config
};

SimResult simulate_frame(const SceneBundle& bundle, const Camera& cam, const RenderConfig& rcfg,
                         const SimConfig& scfg);

} // namespace spnerf
