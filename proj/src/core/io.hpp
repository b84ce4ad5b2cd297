#pragma once

#include <cstdint>
#include <string>

#include "render.hpp"
#include "types.hpp"

#include <nlohmann/json_fwd.hpp>

namespace spnerf {

// --- SceneBundle container (little-endian, CRC32 trailer) ---
void write_bundle(const SceneBundle& bundle, const std::string& path);
SceneBundle read_bundle(const std::string& path);

// exact byte size of the serialized container
std::uint64_t bundle_file_bytes(const GridDims& dims, std::uint32_t subgrid_count,
                                std::uint32_t table_size, std::uint32_t n_keep);
std::uint64_t mlp_weight_bytes();

// dense payload: half features + half density per vertex
std::uint64_t dense_bytes(const GridDims& dims);
// grid-size reduction, MLP weights excluded from the encoded side
double reduction_ratio(const SceneBundle& bundle);

// --- dense grid container: one-line JSON header + raw f32 payload ---
struct DenseGridMeta {
    std::uint64_t seed = 0;
    std::string generator = "unknown";
};
void save_dense(const DenseGrid& grid, const DenseGridMeta& meta, const std::string& path);
DenseGrid load_dense(const std::string& path, DenseGridMeta* meta = nullptr);

// --- images (binary PPM, 8-bit) ---
void write_image(const Image& img, const std::string& path);

// --- metrics documents: flat key/value JSON with schema_version ---
void write_metrics(const nlohmann::json& doc, const std::string& path);

Camera load_camera(const std::string& path);

} // namespace spnerf
