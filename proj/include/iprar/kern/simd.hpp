#pragma once

#include <cstddef>
#include <span>

namespace iprar::kern {

/// Dot product of two equal-length float vectors. Dispatches to the best
/// kernel for this CPU (AVX2+FMA when available, scalar otherwise).
float dot(std::span<const float> a, std::span<const float> b);

/// Scores `n_rows` row-major vectors of width `dims` against `query`:
/// out[i] = dot(rows[i*dims .. ], query). The inner loop of exact top-k
/// search; same dispatch as dot().
void score_rows(const float* rows, std::size_t n_rows, std::size_t dims, const float* query,
                float* out);

/// Reference kernels. Kept callable so the dispatched variants can be
/// equivalence-tested against them.
float dot_scalar(std::span<const float> a, std::span<const float> b);
void score_rows_scalar(const float* rows, std::size_t n_rows, std::size_t dims,
                       const float* query, float* out);

#if defined(__x86_64__) || defined(_M_X64)
float dot_avx2(std::span<const float> a, std::span<const float> b);
void score_rows_avx2(const float* rows, std::size_t n_rows, std::size_t dims, const float* query,
                     float* out);
#endif

/// Name of the kernel the dispatcher resolved to: "avx2" or "scalar".
/// Selection happens once; IPRAR_KERNEL=scalar|avx2|auto overrides it
/// (requesting avx2 on a CPU without it falls back to scalar).
const char* active_kernel();

}  // namespace iprar::kern
