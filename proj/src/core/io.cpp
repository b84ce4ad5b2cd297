#include "io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>
#include <zlib.h>

namespace spnerf {

namespace {

constexpr char kMagic[4] = {'S', 'P', 'N', 'F'};
constexpr std::uint32_t kVersion = 1;

struct ByteWriter {
    std::vector<std::uint8_t> buf;

    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf.insert(buf.end(), b, b + n);
    }
    void u32(std::uint32_t v) {
        std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                             static_cast<std::uint8_t>(v >> 16),
                             static_cast<std::uint8_t>(v >> 24)};
        raw(b, 4);
    }
    void u16(std::uint16_t v) {
        std::uint8_t b[2] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8)};
        raw(b, 2);
    }
    void f32(float v) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        u32(u);
    }
};

struct ByteReader {
    const std::uint8_t* p;
    const std::uint8_t* end;

    void need(std::size_t n) const {
        if (static_cast<std::size_t>(end - p) < n) throw CorruptFileError("truncated bundle file");
    }
    void raw(void* out, std::size_t n) {
        need(n);
        std::memcpy(out, p, n);
        p += n;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                          (static_cast<std::uint32_t>(p[2]) << 16) |
                          (static_cast<std::uint32_t>(p[3]) << 24);
        p += 4;
        return v;
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        p += 2;
        return v;
    }
    float f32() {
        std::uint32_t u = u32();
        float f;
        std::memcpy(&f, &u, 4);
        return f;
    }
};

std::vector<std::uint8_t> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

void spill(const std::string& path, const void* data, std::size_t n) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw IoError("short write: " + path);
}

void write_halves(ByteWriter& w, const std::vector<Half>& v) {
    for (const auto& h : v) w.u16(h.bits());
}

void read_halves(ByteReader& r, std::vector<Half>& v, std::size_t n) {
    v.resize(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = Half::from_bits(r.u16());
}

} // namespace

std::uint64_t mlp_weight_bytes() {
    return 2ull * (static_cast<std::uint64_t>(kMlpHidden) * kMlpIn + kMlpHidden +
                   kMlpHidden * kMlpHidden + kMlpHidden + kMlpOut * kMlpHidden + kMlpOut);
}

std::uint64_t bundle_file_bytes(const GridDims& dims, std::uint32_t subgrid_count,
                                std::uint32_t table_size, std::uint32_t n_keep) {
    std::uint64_t header = 36; // magic, version, dims, K, T, N_keep, scale
    std::uint64_t tables = static_cast<std::uint64_t>(subgrid_count) * table_size * 6;
    std::uint64_t bitmap = (dims.volume() + 7) / 8;
    std::uint64_t codebook = static_cast<std::uint64_t>(kCodebookRows) * kFeatureDim * 2;
    std::uint64_t true_grid = static_cast<std::uint64_t>(n_keep) * kFeatureDim;
    return header + tables + bitmap + codebook + true_grid + mlp_weight_bytes() + 4;
}

std::uint64_t dense_bytes(const GridDims& dims) {
    return dims.volume() * (kFeatureDim + 1) * 2;
}

double reduction_ratio(const SceneBundle& b) {
    std::uint64_t total =
        bundle_file_bytes(b.dims, b.subgrid_count, b.table_size, b.true_grid.rows());
    std::uint64_t grid_bytes = total - mlp_weight_bytes();
    return static_cast<double>(dense_bytes(b.dims)) / static_cast<double>(grid_bytes);
}

void write_bundle(const SceneBundle& b, const std::string& path) {
    ByteWriter w;
    w.raw(kMagic, 4);
    w.u32(kVersion);
    w.u32(b.dims.x);
    w.u32(b.dims.y);
    w.u32(b.dims.z);
    w.u32(b.subgrid_count);
    w.u32(b.table_size);
    w.u32(b.true_grid.rows());
    w.f32(b.true_grid.scale);
    for (const auto& t : b.tables) {
        for (auto idx : t.index) w.u32(idx);
        write_halves(w, t.density);
    }
    w.raw(b.bitmap.bits.data(), b.bitmap.bits.size());
    write_halves(w, b.codebook.entries);
    w.raw(b.true_grid.values.data(), b.true_grid.values.size());
    write_halves(w, b.mlp.w1);
    write_halves(w, b.mlp.b1);
    write_halves(w, b.mlp.w2);
    write_halves(w, b.mlp.b2);
    write_halves(w, b.mlp.w3);
    write_halves(w, b.mlp.b3);
    std::uint32_t crc =
        static_cast<std::uint32_t>(crc32(0, w.buf.data(), static_cast<uInt>(w.buf.size())));
    w.u32(crc);
    spill(path, w.buf.data(), w.buf.size());
}

SceneBundle read_bundle(const std::string& path) {
    auto data = slurp(path);
    if (data.size() < 40) throw CorruptFileError("truncated bundle file");
    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, data.data() + data.size() - 4, 4);
    std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0, data.data(), static_cast<uInt>(data.size() - 4)));
    if (crc != stored_crc) throw CorruptFileError("bundle CRC mismatch");

    ByteReader r{data.data(), data.data() + data.size() - 4};
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw CorruptFileError("bad bundle magic");
    if (r.u32() != kVersion) throw CorruptFileError("unsupported bundle version");

    SceneBundle b;
    b.dims.x = r.u32();
    b.dims.y = r.u32();
    b.dims.z = r.u32();
    b.subgrid_count = r.u32();
    b.table_size = r.u32();
    std::uint32_t n_keep = r.u32();
    b.true_grid.scale = r.f32();
    if (b.subgrid_count == 0 || b.table_size == 0 || b.dims.volume() == 0)
        throw CorruptFileError("malformed bundle header");
    if (n_keep > kMaxKeep) throw CorruptFileError("keep count exceeds address space");
    if (data.size() != bundle_file_bytes(b.dims, b.subgrid_count, b.table_size, n_keep))
        throw CorruptFileError("bundle size inconsistent with header");
    b.subgrid_width = subgrid_width(b.dims.x, b.subgrid_count);

    b.tables.resize(b.subgrid_count);
    const std::uint32_t max_index = kCodebookRows + n_keep;
    for (auto& t : b.tables) {
        t.entries = b.table_size;
        t.index.resize(b.table_size);
        for (auto& idx : t.index) {
            idx = r.u32();
            if (idx >= max_index) throw CorruptFileError("table index out of range");
        }
        read_halves(r, t.density, b.table_size);
    }
    b.bitmap.dims = b.dims;
    b.bitmap.bits.resize((b.dims.volume() + 7) / 8);
    r.raw(b.bitmap.bits.data(), b.bitmap.bits.size());
    read_halves(r, b.codebook.entries, static_cast<std::size_t>(kCodebookRows) * kFeatureDim);
    b.true_grid.values.resize(static_cast<std::size_t>(n_keep) * kFeatureDim);
    r.raw(b.true_grid.values.data(), b.true_grid.values.size());
    read_halves(r, b.mlp.w1, static_cast<std::size_t>(kMlpHidden) * kMlpIn);
    read_halves(r, b.mlp.b1, kMlpHidden);
    read_halves(r, b.mlp.w2, static_cast<std::size_t>(kMlpHidden) * kMlpHidden);
    read_halves(r, b.mlp.b2, kMlpHidden);
    read_halves(r, b.mlp.w3, static_cast<std::size_t>(kMlpOut) * kMlpHidden);
    read_halves(r, b.mlp.b3, kMlpOut);
    return b;
}

void save_dense(const DenseGrid& grid, const DenseGridMeta& meta, const std::string& path) {
    nlohmann::json header = {
        {"dims", {grid.dims.x, grid.dims.y, grid.dims.z}},
        {"seed", meta.seed},
        {"generator", meta.generator},
    };
    std::string hs = header.dump();
    hs.push_back('\n');
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    // per-vertex [density, f0..f11], x-major
    const std::uint64_t vol = grid.dims.volume();
    std::vector<float> row(kFeatureDim + 1);
    for (std::uint64_t i = 0; i < vol; ++i) {
        row[0] = grid.density[i];
        std::memcpy(&row[1], &grid.features[i * kFeatureDim], kFeatureDim * 4);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * 4));
    }
    if (!out) throw IoError("short write: " + path);
}

DenseGrid load_dense(const std::string& path, DenseGridMeta* meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::string header_line;
    if (!std::getline(in, header_line)) throw CorruptFileError("missing dense grid header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_line);
    } catch (const nlohmann::json::exception&) {
        throw CorruptFileError("malformed dense grid header");
    }
    DenseGrid g;
    try {
        g.dims.x = header.at("dims").at(0).get<std::uint32_t>();
        g.dims.y = header.at("dims").at(1).get<std::uint32_t>();
        g.dims.z = header.at("dims").at(2).get<std::uint32_t>();
        if (meta) {
            meta->seed = header.value("seed", 0ull);
            meta->generator = header.value("generator", "unknown");
        }
    } catch (const nlohmann::json::exception&) {
        throw CorruptFileError("malformed dense grid header");
    }
    const std::uint64_t vol = g.dims.volume();
    if (vol == 0) throw CorruptFileError("dense grid header has empty dims");
    std::vector<float> payload(vol * (kFeatureDim + 1));
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * 4));
    if (in.gcount() != static_cast<std::streamsize>(payload.size() * 4))
        throw CorruptFileError("dense grid payload length mismatch");
    char extra;
    if (in.read(&extra, 1)) throw CorruptFileError("dense grid payload length mismatch");
    g.density.resize(vol);
    g.features.resize(vol * kFeatureDim);
    for (std::uint64_t i = 0; i < vol; ++i) {
        g.density[i] = payload[i * (kFeatureDim + 1)];
        std::memcpy(&g.features[i * kFeatureDim], &payload[i * (kFeatureDim + 1) + 1],
                    kFeatureDim * 4);
    }
    return g;
}

void write_image(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 3);
    for (std::uint32_t y = 0; y < img.height; ++y) {
        for (std::uint32_t x = 0; x < img.width; ++x) {
            const float* p = img.pixel(x, y);
            for (int c = 0; c < 3; ++c) {
                float v = std::min(std::max(p[c], 0.0f), 1.0f);
                row[x * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw IoError("short write: " + path);
}

void write_metrics(const nlohmann::json& doc, const std::string& path) {
    nlohmann::json out = doc;
    out["schema_version"] = 1;
    std::string s = out.dump(2);
    s.push_back('\n');
    spill(path, s.data(), s.size());
}

Camera load_camera(const std::string& path) {
    auto data = slurp(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(data.begin(), data.end());
        std::array<float, 3> pos = {j.at("position").at(0), j.at("position").at(1),
                                    j.at("position").at(2)};
        std::array<float, 3> look = {j.at("look_at").at(0), j.at("look_at").at(1),
                                     j.at("look_at").at(2)};
        std::array<float, 3> up = {j.at("up").at(0), j.at("up").at(1), j.at("up").at(2)};
        float focal = j.at("focal");
        std::uint32_t w = j.at("resolution").at(0);
        std::uint32_t h = j.at("resolution").at(1);
        return make_lookat_camera(pos, look, up, focal, w, h);
    } catch (const nlohmann::json::exception& e) {
        throw SpnerfError(std::string("malformed camera file: ") + e.what());
    }
}

} // namespace spnerf
