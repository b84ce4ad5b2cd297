#include "render.hpp"

#include "grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace spnerf {

namespace {

std::array<float, 3> normalize3(const std::array<float, 3>& v) {
    float n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    return {v[0] / n, v[1] / n, v[2] / n};
}

std::array<float, 3> cross3(const std::array<float, 3>& a, const std::array<float, 3>& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

} // namespace

Camera make_lookat_camera(const std::array<float, 3>& position,
                          const std::array<float, 3>& look_at, const std::array<float, 3>& up,
                          float focal, std::uint32_t width, std::uint32_t height) {
    Camera cam;
    cam.position = position;
    auto zc = normalize3({look_at[0] - position[0], look_at[1] - position[1],
                          look_at[2] - position[2]});
    auto xc = normalize3(cross3(up, zc));
    auto yc = cross3(zc, xc);
    for (int r = 0; r < 3; ++r) cam.rotation[r] = {xc[r], yc[r], zc[r]}; // columns x,y,z
    cam.focal = focal;
    cam.width = width;
    cam.height = height;
    return cam;
}

Ray camera_ray(const Camera& cam, std::uint32_t px, std::uint32_t py) {
    float u = (static_cast<float>(px) + 0.5f - 0.5f * cam.width) / cam.focal;
    float v = (static_cast<float>(py) + 0.5f - 0.5f * cam.height) / cam.focal;
    std::array<float, 3> dc = normalize3({u, v, 1.0f});
    std::array<float, 3> dw;
    for (int r = 0; r < 3; ++r)
        dw[r] = cam.rotation[r][0] * dc[0] + cam.rotation[r][1] * dc[1] + cam.rotation[r][2] * dc[2];
    return {cam.position, normalize3(dw)};
}

Aabb grid_aabb(const GridDims& dims) {
    return {{0, 0, 0},
            {static_cast<float>(dims.x - 1), static_cast<float>(dims.y - 1),
             static_cast<float>(dims.z - 1)}};
}

std::vector<SamplePoint> sample_ray(const Ray& ray, const Aabb& box, const RenderConfig& cfg) {
    float t0 = cfg.near_clip, t1 = cfg.far_clip;
    for (int a = 0; a < 3; ++a) {
        if (ray.dir[a] == 0.0f) {
            if (ray.origin[a] < box.lo[a] || ray.origin[a] > box.hi[a]) return {};
            continue;
        }
        float ta = (box.lo[a] - ray.origin[a]) / ray.dir[a];
        float tb = (box.hi[a] - ray.origin[a]) / ray.dir[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (t1 <= t0) return {};
    std::vector<SamplePoint> out;
    for (float t = t0 + 0.5f * cfg.step; t < t1; t += cfg.step) {
        SamplePoint s;
        s.x = std::clamp(ray.origin[0] + t * ray.dir[0], box.lo[0], box.hi[0]);
        s.y = std::clamp(ray.origin[1] + t * ray.dir[1], box.lo[1], box.hi[1]);
        s.z = std::clamp(ray.origin[2] + t * ray.dir[2], box.lo[2], box.hi[2]);
        s.dx = ray.dir[0];
        s.dy = ray.dir[1];
        s.dz = ray.dir[2];
        out.push_back(s);
    }
    return out;
}

float interp_weight(const SamplePoint& s, const Position3& vertex) {
    // product formed in single precision, rounded to half once: rounding each
    // factor separately lets the eight weights drift past the 1e-3 sum budget
    float wx = 1.0f - std::fabs(s.x - static_cast<float>(vertex.x));
    float wy = 1.0f - std::fabs(s.y - static_cast<float>(vertex.y));
    float wz = 1.0f - std::fabs(s.z - static_cast<float>(vertex.z));
    return half_round(wx * wy * wz);
}

namespace {

// vertex source abstraction: the only code that differs between bundle
// rendering and the dense oracle
struct BundleSource {
    const SceneBundle& bundle;
    bool masked;
    FrameTrace* trace;

    const Bitmap& bitmap() const { return bundle.bitmap; }

    VertexData fetch(const Position3& p, bool bit) const {
        VertexData out;
        if (masked && !bit) return out;
        const std::uint32_t k = p.x / bundle.subgrid_width;
        const HashTable& t = bundle.tables[k];
        const std::uint32_t slot = hash_index(p, t.entries);
        const std::uint32_t idx = t.index[slot];
        if (trace && bit) {
            if (idx >= kCodebookRows)
                trace->true_rows[k].insert(idx - kCodebookRows);
            else
                trace->any_codebook_hit = true;
        }
        out.feature = unified_fetch(bundle, idx);
        out.density = t.density[slot].to_float();
        return out;
    }

    std::uint32_t subgrid_of(std::uint32_t x) const { return x / bundle.subgrid_width; }
};

struct DenseSource {
    const DenseGrid& grid;
    const Bitmap& bm;

    const Bitmap& bitmap() const { return bm; }

    VertexData fetch(const Position3& p, bool bit) const {
        VertexData out;
        if (!bit) return out;
        std::uint64_t i = grid.index_of(p);
        for (int c = 0; c < kFeatureDim; ++c)
            out.feature[c] = half_round(grid.features[i * kFeatureDim + c]);
        out.density = half_round(grid.density[i]);
        return out;
    }

    std::uint32_t subgrid_of(std::uint32_t) const { return 0; }
};

template <class Source>
InterpResult trilinear_fetch_impl(const Source& src, const GridDims& dims, const SamplePoint& s) {
    InterpResult r;
    auto base = [&](float v, std::uint32_t dim) {
        float f = std::floor(v);
        long i = static_cast<long>(f);
        i = std::clamp<long>(i, 0, static_cast<long>(dim) - 2);
        return static_cast<std::uint32_t>(i);
    };
    const std::uint32_t x0 = base(s.x, dims.x), y0 = base(s.y, dims.y), z0 = base(s.z, dims.z);
    float facc[kFeatureDim] = {};
    float dacc = 0.0f;
    for (int dx = 0; dx <= 1; ++dx)
        for (int dy = 0; dy <= 1; ++dy)
            for (int dz = 0; dz <= 1; ++dz) {
                Position3 v{x0 + static_cast<std::uint32_t>(dx), y0 + static_cast<std::uint32_t>(dy),
                            z0 + static_cast<std::uint32_t>(dz)};
                bool bit = src.bitmap().get(v);
                if (bit) r.all_corners_zero = false;
                VertexData vd = src.fetch(v, bit);
                float w = interp_weight(s, v);
                for (int c = 0; c < kFeatureDim; ++c) facc[c] += hmul(w, vd.feature[c]);
                dacc += hmul(w, vd.density);
            }
    for (int c = 0; c < kFeatureDim; ++c) r.feature[c] = half_round(facc[c]);
    r.density = half_round(dacc);
    return r;
}

} // namespace

InterpResult trilinear_fetch(const SceneBundle& bundle, const SamplePoint& s, bool masked) {
    BundleSource src{bundle, masked, nullptr};
    return trilinear_fetch_impl(src, bundle.dims, s);
}

InterpResult trilinear_fetch_dense(const DenseGrid& grid, const Bitmap& bitmap,
                                   const SamplePoint& s) {
    DenseSource src{grid, bitmap};
    return trilinear_fetch_impl(src, grid.dims, s);
}

std::array<float, 27> encode_viewdir(float dx, float dy, float dz) {
    std::array<float, 27> out;
    out[0] = dx;
    out[1] = dy;
    out[2] = dz;
    int o = 3;
    for (int k = 0; k < 4; ++k) {
        float freq = static_cast<float>(1 << k) * static_cast<float>(M_PI);
        out[o++] = std::sin(freq * dx);
        out[o++] = std::sin(freq * dy);
        out[o++] = std::sin(freq * dz);
        out[o++] = std::cos(freq * dx);
        out[o++] = std::cos(freq * dy);
        out[o++] = std::cos(freq * dz);
    }
    return out;
}

namespace {

inline float sigmoidf(float x) { return 1.0f / (1.0f + std::exp(-x)); }

// weights expanded to float once per frame; values stay half-representable
struct MlpFloat {
    std::vector<float> w1, b1, w2, b2, w3, b3;

    explicit MlpFloat(const MlpWeights& w) {
        auto expand = [](const std::vector<Half>& src, std::vector<float>& dst) {
            dst.resize(src.size());
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i].to_float();
        };
        expand(w.w1, w1);
        expand(w.b1, b1);
        expand(w.w2, w2);
        expand(w.b2, b2);
        expand(w.w3, w3);
        expand(w.b3, b3);
    }
};

std::array<float, 3> mlp_forward_f(const std::array<float, kMlpRealIn>& input,
                                   const MlpFloat& w) {
    // inputs rounded to half; the pad element (index 39) is always 0 and
    // contributes nothing to layer 1
    float x[kMlpRealIn];
    for (int i = 0; i < kMlpRealIn; ++i) x[i] = half_round(input[i]);

    float h1[kMlpHidden];
    for (int o = 0; o < kMlpHidden; ++o) {
        float acc = w.b1[o] + hmul_dot(&w.w1[static_cast<std::size_t>(o) * kMlpIn], x, kMlpRealIn);
        h1[o] = half_round(std::max(0.0f, acc));
    }
    float h2[kMlpHidden];
    for (int o = 0; o < kMlpHidden; ++o) {
        float acc =
            w.b2[o] + hmul_dot(&w.w2[static_cast<std::size_t>(o) * kMlpHidden], h1, kMlpHidden);
        h2[o] = half_round(std::max(0.0f, acc));
    }
    std::array<float, 3> out;
    for (int o = 0; o < kMlpOut; ++o) {
        float acc =
            w.b3[o] + hmul_dot(&w.w3[static_cast<std::size_t>(o) * kMlpHidden], h2, kMlpHidden);
        out[o] = sigmoidf(acc);
    }
    return out;
}

} // namespace

std::array<float, 3> mlp_forward(const std::array<float, kMlpRealIn>& input,
                                 const MlpWeights& weights) {
    return mlp_forward_f(input, MlpFloat(weights));
}

float density_activation(float sigma, float shift) {
    auto softplus = [](float x) {
        return x > 0.0f ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    };
    return std::max(0.0f, softplus(sigma + shift) - softplus(shift));
}

std::array<float, 3> composite(const std::vector<CompositeSample>& samples,
                               const RenderConfig& cfg) {
    float acc[3] = {0, 0, 0};
    float transmittance = 1.0f;
    for (const auto& s : samples) {
        float act = density_activation(s.density, cfg.density_shift);
        float alpha = 1.0f - std::exp(-act * cfg.step);
        alpha = std::clamp(alpha, 0.0f, 1.0f);
        if (alpha > 0.0f) {
            float w = transmittance * alpha;
            for (int c = 0; c < 3; ++c) acc[c] += w * s.rgb[c];
            transmittance *= 1.0f - alpha;
        }
    }
    float bg = cfg.white_background ? 1.0f : 0.0f;
    std::array<float, 3> out;
    for (int c = 0; c < 3; ++c) out[c] = std::clamp(acc[c] + transmittance * bg, 0.0f, 1.0f);
    return out;
}

unsigned render_thread_count() {
    if (const char* env = std::getenv("SPNERF_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? hc : 1;
}

namespace {

template <class Source>
void render_pixel(const Source& src, const GridDims& dims, const MlpFloat& mlp,
                  const Camera& cam, const RenderConfig& cfg, bool skip_zero, std::uint32_t px,
                  std::uint32_t py, float* out_rgb, FrameTrace* trace) {
    Ray ray = camera_ray(cam, px, py);
    auto samples = sample_ray(ray, grid_aabb(dims), cfg);
    std::vector<CompositeSample> cs;
    cs.reserve(samples.size());
    auto base = [](float v, std::uint32_t dim) {
        long i = std::clamp<long>(static_cast<long>(std::floor(v)), 0,
                                  static_cast<long>(dim) - 2);
        return static_cast<std::uint32_t>(i);
    };
    for (const auto& s : samples) {
        InterpResult r = trilinear_fetch_impl(src, dims, s);
        bool needs_mlp = !(skip_zero && r.all_corners_zero);
        CompositeSample c;
        c.density = r.density;
        if (needs_mlp) {
            std::array<float, kMlpRealIn> input;
            for (int i = 0; i < kFeatureDim; ++i) input[i] = r.feature[i];
            auto vd = encode_viewdir(s.dx, s.dy, s.dz);
            for (int i = 0; i < 27; ++i) input[kFeatureDim + i] = vd[i];
            c.rgb = mlp_forward_f(input, mlp);
        }
        cs.push_back(c);
        if (trace) {
            const std::uint32_t x0 = base(s.x, dims.x);
            FrameTrace::Sample ts;
            ts.base_subgrid = src.subgrid_of(x0);
            ts.high_subgrid = src.subgrid_of(x0 + 1);
            ts.needs_mlp = needs_mlp ? 1 : 0;
            trace->samples.push_back(ts);
            trace->touched_subgrids.insert(ts.base_subgrid);
            trace->touched_subgrids.insert(ts.high_subgrid);
        }
    }
    auto rgb = composite(cs, cfg);
    out_rgb[0] = rgb[0];
    out_rgb[1] = rgb[1];
    out_rgb[2] = rgb[2];
}

template <class Source>
Image render_frame(const Source& src, const GridDims& dims, const MlpWeights& weights,
                   const Camera& cam, const RenderConfig& cfg, FrameTrace* trace) {
    const MlpFloat mlp(weights);
    // an unmasked render must not skip: corner bits say nothing about the
    // table contents it is deliberately exposing
    const bool skip_zero = cfg.skip_zero && cfg.use_masking;
    Image img;
    img.width = cam.width;
    img.height = cam.height;
    img.rgb.assign(static_cast<std::size_t>(cam.width) * cam.height * 3, 0.0f);

    unsigned threads = trace ? 1 : render_thread_count();
    threads = std::min<unsigned>(threads, cam.height);
    if (threads <= 1) {
        for (std::uint32_t py = 0; py < cam.height; ++py)
            for (std::uint32_t px = 0; px < cam.width; ++px)
                render_pixel(src, dims, mlp, cam, cfg, skip_zero, px, py, img.pixel(px, py),
                             trace);
        return img;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::uint32_t py = t; py < cam.height; py += threads)
                for (std::uint32_t px = 0; px < cam.width; ++px)
                    render_pixel(src, dims, mlp, cam, cfg, skip_zero, px, py,
                                 img.pixel(px, py), nullptr);
        });
    }
    for (auto& th : pool) th.join();
    return img;
}

} // namespace

Image render_image(const SceneBundle& bundle, const Camera& cam, const RenderConfig& cfg,
                   FrameTrace* trace) {
    BundleSource src{bundle, cfg.use_masking, trace};
    return render_frame(src, bundle.dims, bundle.mlp, cam, cfg, trace);
}

Image render_image_dense(const DenseGrid& grid, const MlpWeights& mlp, const Camera& cam,
                         const RenderConfig& cfg) {
    Bitmap bm = build_bitmap(grid);
    DenseSource src{grid, bm};
    return render_frame(src, grid.dims, mlp, cam, cfg, nullptr);
}

double psnr(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw SpnerfError("psnr: image dimensions differ");
    double se = 0.0;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) {
        double d = static_cast<double>(a.rgb[i]) - b.rgb[i];
        se += d * d;
    }
    double mse = se / static_cast<double>(a.rgb.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

} // namespace spnerf
