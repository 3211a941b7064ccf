#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "stssl/core/rng.hpp"
#include "stssl/kernels/kernels.hpp"

using namespace stssl;

namespace {

std::vector<float> random_vec(std::size_t n, Rng& rng) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return v;
}

// Double-precision reference for both ISA paths.
void gemm_nn_ref(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
                 std::vector<double>& C, bool accumulate) {
    if (!accumulate) C.assign(static_cast<std::size_t>(M) * N, 0.0);
    for (int m = 0; m < M; ++m)
        for (int k = 0; k < K; ++k) {
            const double a = A[static_cast<std::size_t>(m) * lda + k];
            for (int n = 0; n < N; ++n)
                C[static_cast<std::size_t>(m) * N + n] +=
                    a * static_cast<double>(B[static_cast<std::size_t>(k) * ldb + n]);
        }
}

}  // namespace

TEST_CASE("gemm_nn matches double reference on both ISAs") {
    Rng rng(7);
    for (auto [M, N, K] : {std::tuple{6, 16, 32},   {13, 47, 81},  {1, 8, 5},
                           {40, 1024, 540}, {3, 7, 2},    {24, 33, 17}}) {
        auto A = random_vec(static_cast<std::size_t>(M) * K, rng);
        auto B = random_vec(static_cast<std::size_t>(K) * N, rng);
        std::vector<double> ref;
        gemm_nn_ref(M, N, K, A.data(), K, B.data(), N, ref, false);

        for (auto isa : {kernels::Isa::scalar, kernels::Isa::avx2}) {
            kernels::select_isa(isa);
            std::vector<float> C(static_cast<std::size_t>(M) * N, 42.0f);
            kernels::sgemm_nn(M, N, K, A.data(), K, B.data(), N, C.data(), N, false);
            for (std::size_t i = 0; i < C.size(); ++i)
                CHECK(std::abs(C[i] - ref[i]) < 1e-4 * (1.0 + std::abs(ref[i])));
        }
    }
    kernels::select_isa(kernels::Isa::avx2);
}

TEST_CASE("gemm_nn accumulate adds onto C") {
    Rng rng(8);
    const int M = 5, N = 19, K = 11;
    auto A = random_vec(static_cast<std::size_t>(M) * K, rng);
    auto B = random_vec(static_cast<std::size_t>(K) * N, rng);
    auto C0 = random_vec(static_cast<std::size_t>(M) * N, rng);
    std::vector<double> ref(C0.begin(), C0.end());
    gemm_nn_ref(M, N, K, A.data(), K, B.data(), N, ref, true);
    for (auto isa : {kernels::Isa::scalar, kernels::Isa::avx2}) {
        kernels::select_isa(isa);
        auto C = C0;
        kernels::sgemm_nn(M, N, K, A.data(), K, B.data(), N, C.data(), N, true);
        for (std::size_t i = 0; i < C.size(); ++i)
            CHECK(std::abs(C[i] - ref[i]) < 1e-4 * (1.0 + std::abs(ref[i])));
    }
    kernels::select_isa(kernels::Isa::avx2);
}

TEST_CASE("gemm_nt equals gemm_nn against transposed operand") {
    Rng rng(9);
    for (auto [M, N, K] : {std::tuple{4, 6, 64}, {7, 3, 100}, {1, 1, 7}, {12, 36, 2048}}) {
        auto A = random_vec(static_cast<std::size_t>(M) * K, rng);
        auto Bt = random_vec(static_cast<std::size_t>(N) * K, rng);  // B^T stored [N x K]
        std::vector<float> B(static_cast<std::size_t>(K) * N);
        for (int k = 0; k < K; ++k)
            for (int n = 0; n < N; ++n)
                B[static_cast<std::size_t>(k) * N + n] = Bt[static_cast<std::size_t>(n) * K + k];
        std::vector<double> ref;
        gemm_nn_ref(M, N, K, A.data(), K, B.data(), N, ref, false);
        for (auto isa : {kernels::Isa::scalar, kernels::Isa::avx2}) {
            kernels::select_isa(isa);
            std::vector<float> C(static_cast<std::size_t>(M) * N);
            kernels::sgemm_nt(M, N, K, A.data(), K, Bt.data(), K, C.data(), N, false);
            for (std::size_t i = 0; i < C.size(); ++i)
                CHECK(std::abs(C[i] - ref[i]) < 1e-3 * (1.0 + std::abs(ref[i])));
        }
    }
    kernels::select_isa(kernels::Isa::avx2);
}

TEST_CASE("elementwise kernels agree across ISAs") {
    Rng rng(10);
    const std::size_t n = 1003;  // odd length exercises the tails
    auto x = random_vec(n, rng);
    auto y = random_vec(n, rng);

    for (auto isa : {kernels::Isa::scalar, kernels::Isa::avx2}) {
        kernels::select_isa(isa);
        auto y2 = y;
        kernels::saxpy(n, 0.37f, x.data(), y2.data());
        for (std::size_t i = 0; i < n; ++i)
            CHECK(y2[i] == doctest::Approx(y[i] + 0.37f * x[i]).epsilon(1e-6));

        std::vector<float> sig(n), silu(n);
        kernels::ssilu(n, x.data(), silu.data(), sig.data());
        for (std::size_t i = 0; i < n; i += 97) {
            const double s = 1.0 / (1.0 + std::exp(-static_cast<double>(x[i])));
            CHECK(sig[i] == doctest::Approx(s).epsilon(1e-5));
            CHECK(silu[i] == doctest::Approx(x[i] * s).epsilon(1e-5));
        }

        const double sum_ref = [&] {
            double s = 0;
            for (auto v : x) s += v;
            return s;
        }();
        CHECK(kernels::ssum(n, x.data()) == doctest::Approx(sum_ref).epsilon(1e-4));
        const double dot_ref = [&] {
            double s = 0;
            for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(x[i]) * y[i];
            return s;
        }();
        CHECK(kernels::sdot(n, x.data(), y.data()) == doctest::Approx(dot_ref).epsilon(1e-4));
    }
    kernels::select_isa(kernels::Isa::avx2);
}

TEST_CASE("sigmoid extremes stay finite and saturate") {
    for (auto isa : {kernels::Isa::scalar, kernels::Isa::avx2}) {
        kernels::select_isa(isa);
        float xs[4] = {-200.0f, -30.0f, 30.0f, 200.0f};
        float ys[4];
        kernels::ssigmoid(4, xs, ys);
        CHECK(ys[0] >= 0.0f);
        CHECK(ys[0] < 1e-12f);
        CHECK(ys[3] <= 1.0f);
        CHECK(ys[3] > 1.0f - 1e-6f);
    }
    kernels::select_isa(kernels::Isa::avx2);
}
