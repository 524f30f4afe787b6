#include "iprar/kern/simd.hpp"

#include <cassert>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <string_view>

namespace iprar::kern {

float dot_scalar(std::span<const float> a, std::span<const float> b) {
    assert(a.size() == b.size());
    float acc = 0.0f;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

void score_rows_scalar(const float* rows, std::size_t n_rows, std::size_t dims,
                       const float* query, float* out) {
    for (std::size_t r = 0; r < n_rows; ++r) {
        out[r] = dot_scalar({rows + r * dims, dims}, {query, dims});
    }
}

namespace {

using DotFn = float (*)(std::span<const float>, std::span<const float>);
using ScoreFn = void (*)(const float*, std::size_t, std::size_t, const float*, float*);

struct Dispatch {
    DotFn dot = &dot_scalar;
    ScoreFn score = &score_rows_scalar;
    const char* name = "scalar";
};

bool cpu_has_avx2_fma() {
#if (defined(__x86_64__) || defined(_M_X64)) && defined(__GNUC__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Dispatch resolve() {
    Dispatch d;
    std::string_view want = "auto";
    if (const char* env = std::getenv("IPRAR_KERNEL")) want = env;
#if defined(IPRAR_HAVE_AVX2) && (defined(__x86_64__) || defined(_M_X64))
    bool use_avx2 = want != "scalar" && cpu_has_avx2_fma();
#else
    bool use_avx2 = false;
    (void)cpu_has_avx2_fma;
#endif
#if defined(IPRAR_HAVE_AVX2) && (defined(__x86_64__) || defined(_M_X64))
    if (use_avx2) {
        d.dot = &dot_avx2;
        d.score = &score_rows_avx2;
        d.name = "avx2";
    }
#endif
    return d;
}

const Dispatch& dispatch() {
    static Dispatch d = resolve();
    return d;
}

}  // namespace

float dot(std::span<const float> a, std::span<const float> b) {
    return dispatch().dot(a, b);
}

void score_rows(const float* rows, std::size_t n_rows, std::size_t dims, const float* query,
                float* out) {
    dispatch().score(rows, n_rows, dims, query, out);
}

const char* active_kernel() {
    return dispatch().name;
}

}  // namespace iprar::kern
