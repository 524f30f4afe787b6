#include "iprar/kern/simd.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace iprar;

namespace {

std::vector<float> random_vec(std::mt19937& rng, std::size_t n) {
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    std::vector<float> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

}  // namespace

TEST_CASE("scalar dot matches a double-precision reference") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 1 + rng() % 300;
        auto a = random_vec(rng, n);
        auto b = random_vec(rng, n);
        double expect = 0.0;
        for (std::size_t i = 0; i < n; ++i) expect += double(a[i]) * double(b[i]);
        CHECK(kern::dot_scalar(a, b) == doctest::Approx(expect).epsilon(1e-4));
    }
}

TEST_CASE("dispatched dot agrees with the scalar reference") {
    std::mt19937 rng(11);
    // Widths straddling every vector-remainder case.
    for (std::size_t n : {1u, 3u, 7u, 8u, 9u, 15u, 16u, 17u, 64u, 100u, 257u}) {
        auto a = random_vec(rng, n);
        auto b = random_vec(rng, n);
        float ref = kern::dot_scalar(a, b);
        CHECK(kern::dot(a, b) == doctest::Approx(ref).epsilon(1e-4));
    }
}

#if defined(__x86_64__) || defined(_M_X64)
TEST_CASE("avx2 kernels agree with scalar when the CPU has them") {
    if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return;
    std::mt19937 rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t dims = 1 + rng() % 130;
        std::size_t rows = 1 + rng() % 40;
        auto mat = random_vec(rng, dims * rows);
        auto q = random_vec(rng, dims);
        std::vector<float> out_scalar(rows), out_avx(rows);
        kern::score_rows_scalar(mat.data(), rows, dims, q.data(), out_scalar.data());
        kern::score_rows_avx2(mat.data(), rows, dims, q.data(), out_avx.data());
        for (std::size_t r = 0; r < rows; ++r) {
            CHECK(out_avx[r] == doctest::Approx(out_scalar[r]).epsilon(1e-4));
        }
    }
}
#endif

TEST_CASE("score_rows equals per-row dot") {
    std::mt19937 rng(17);
    std::size_t dims = 33, rows = 9;
    auto mat = random_vec(rng, dims * rows);
    auto q = random_vec(rng, dims);
    std::vector<float> out(rows);
    kern::score_rows(mat.data(), rows, dims, q.data(), out.data());
    for (std::size_t r = 0; r < rows; ++r) {
        std::span<const float> row(mat.data() + r * dims, dims);
        CHECK(out[r] == doctest::Approx(kern::dot(row, q)).epsilon(1e-5));
    }
}

TEST_CASE("active_kernel names a known implementation") {
    std::string k = kern::active_kernel();
    CHECK((k == "avx2" || k == "scalar"));
}
