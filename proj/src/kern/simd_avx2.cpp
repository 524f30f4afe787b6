// AVX2+FMA variants of the scoring kernels. This translation unit is the only
// one compiled with -mavx2 -mfma; callers reach it through the runtime
// dispatcher in simd.cpp.

#include "iprar/kern/simd.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cassert>

namespace iprar::kern {

namespace {

inline float hsum256(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    __m128 s = _mm_add_ps(lo, hi);
    s = _mm_add_ps(s, _mm_movehl_ps(s, s));
    s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 0x55));
    return _mm_cvtss_f32(s);
}

}  // namespace

float dot_avx2(std::span<const float> a, std::span<const float> b) {
    assert(a.size() == b.size());
    const std::size_t n = a.size();
    const float* pa = a.data();
    const float* pb = b.data();

    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(pa + i), _mm256_loadu_ps(pb + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(pa + i + 8), _mm256_loadu_ps(pb + i + 8), acc1);
    }
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(pa + i), _mm256_loadu_ps(pb + i), acc0);
    }
    float acc = hsum256(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) acc += pa[i] * pb[i];
    return acc;
}

void score_rows_avx2(const float* rows, std::size_t n_rows, std::size_t dims, const float* query,
                     float* out) {
    for (std::size_t r = 0; r < n_rows; ++r) {
        out[r] = dot_avx2({rows + r * dims, dims}, {query, dims});
    }
}

}  // namespace iprar::kern

#endif  // x86_64
