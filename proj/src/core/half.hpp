#pragma once

#include <cstdint>
#include <cstring>

#if defined(__F16C__)
#include <immintrin.h>
#endif

namespace spnerf {

// IEEE 754 binary16 stored as raw bits. Conversions use round-to-nearest-even.
// All on-chip datapath values (hash-table densities, codebook rows, MLP
// weights, interpolation results) live in this type; accumulations are done
// in float and rounded back at the boundaries.
class Half {
public:
    Half() = default;
    explicit Half(float f) : bits_(from_float(f)) {}

    static Half from_bits(std::uint16_t b) {
        Half h;
        h.bits_ = b;
        return h;
    }

    std::uint16_t bits() const { return bits_; }

    float to_float() const {
#if defined(__F16C__)
        return _cvtsh_ss(bits_);
#else
        return to_float_soft();
#endif
    }

    float to_float_soft() const {
        std::uint32_t sign = static_cast<std::uint32_t>(bits_ & 0x8000u) << 16;
        std::uint32_t exp = (bits_ >> 10) & 0x1Fu;
        std::uint32_t mant = bits_ & 0x3FFu;
        std::uint32_t out;
        if (exp == 0) {
            if (mant == 0) {
                out = sign;
            } else {
                // subnormal: normalize
                int shift = 0;
                while (!(mant & 0x400u)) {
                    mant <<= 1;
                    ++shift;
                }
                mant &= 0x3FFu;
                out = sign | ((127 - 15 - shift) << 23) | (mant << 13);
            }
        } else if (exp == 31) {
            out = sign | 0x7F800000u | (mant << 13);
        } else {
            out = sign | ((exp + 127 - 15) << 23) | (mant << 13);
        }
        float f;
        std::memcpy(&f, &out, 4);
        return f;
    }

    bool operator==(const Half& o) const { return bits_ == o.bits_; }
    bool operator!=(const Half& o) const { return bits_ != o.bits_; }

    static std::uint16_t from_float(float f) {
#if defined(__F16C__)
        return static_cast<std::uint16_t>(_cvtss_sh(f, _MM_FROUND_TO_NEAREST_INT));
#else
        return from_float_soft(f);
#endif
    }

    // round-to-nearest-even, bit-identical to the F16C path
    static std::uint16_t from_float_soft(float f) {
        std::uint32_t x;
        std::memcpy(&x, &f, 4);
        std::uint32_t sign = (x >> 16) & 0x8000u;
        std::int32_t exp = static_cast<std::int32_t>((x >> 23) & 0xFFu) - 127 + 15;
        std::uint32_t mant = x & 0x7FFFFFu;
        if (((x >> 23) & 0xFFu) == 0xFFu) {
            // inf / nan
            return static_cast<std::uint16_t>(sign | 0x7C00u | (mant ? 0x200u : 0u));
        }
        if (exp >= 31) {
            return static_cast<std::uint16_t>(sign | 0x7C00u); // overflow -> inf
        }
        if (exp <= 0) {
            if (exp < -10) return static_cast<std::uint16_t>(sign); // underflow -> 0
            // subnormal half
            mant |= 0x800000u;
            int shift = 14 - exp;
            std::uint32_t q = mant >> shift;
            std::uint32_t rem = mant & ((1u << shift) - 1);
            std::uint32_t halfway = 1u << (shift - 1);
            if (rem > halfway || (rem == halfway && (q & 1u))) ++q;
            return static_cast<std::uint16_t>(sign | q);
        }
        std::uint32_t q = mant >> 13;
        std::uint32_t rem = mant & 0x1FFFu;
        std::uint16_t h = static_cast<std::uint16_t>(sign | (static_cast<std::uint32_t>(exp) << 10) | q);
        if (rem > 0x1000u || (rem == 0x1000u && (h & 1u))) ++h; // carries into exp correctly
        return h;
    }

private:
    std::uint16_t bits_ = 0;
};

inline float half_round(float f) { return Half(f).to_float(); }

// half-precision multiply: operands already half-representable, product
// rounded back to half.
inline float hmul(float a, float b) { return half_round(a * b); }

// sum of half-rounded products, accumulated in single precision
inline float hmul_dot(const float* a, const float* b, int n) {
    int i = 0;
    float s = 0.0f;
#if defined(__F16C__) && defined(__AVX__)
    __m256 acc = _mm256_setzero_ps();
    for (; i + 8 <= n; i += 8) {
        __m256 p = _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        acc = _mm256_add_ps(acc, _mm256_cvtph_ps(_mm256_cvtps_ph(p, _MM_FROUND_TO_NEAREST_INT)));
    }
    float lanes[8];
    _mm256_storeu_ps(lanes, acc);
    s = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
        ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
#endif
    for (; i < n; ++i) s += hmul(a[i], b[i]);
    return s;
}

} // namespace spnerf
