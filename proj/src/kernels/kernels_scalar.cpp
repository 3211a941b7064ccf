#include "stssl/kernels/kernels.hpp"

#include <cmath>

namespace stssl::kernels::scalar {

void sgemm_nn(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
              float* C, int ldc, bool accumulate) {
    for (int m = 0; m < M; ++m) {
        float* crow = C + static_cast<std::size_t>(m) * ldc;
        if (!accumulate)
            for (int n = 0; n < N; ++n) crow[n] = 0.0f;
        for (int k = 0; k < K; ++k) {
            const float a = A[static_cast<std::size_t>(m) * lda + k];
            if (a == 0.0f) continue;
            const float* brow = B + static_cast<std::size_t>(k) * ldb;
            for (int n = 0; n < N; ++n) crow[n] += a * brow[n];
        }
    }
}

void sgemm_nt(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
              float* C, int ldc, bool accumulate) {
    for (int m = 0; m < M; ++m) {
        const float* arow = A + static_cast<std::size_t>(m) * lda;
        float* crow = C + static_cast<std::size_t>(m) * ldc;
        for (int n = 0; n < N; ++n) {
            const float* brow = B + static_cast<std::size_t>(n) * ldb;
            float acc = 0.0f;
            for (int k = 0; k < K; ++k) acc += arow[k] * brow[k];
            if (accumulate) crow[n] += acc;
            else crow[n] = acc;
        }
    }
}

void saxpy(std::size_t n, float a, const float* x, float* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void sadd(std::size_t n, const float* x, float* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

void sscale(std::size_t n, float a, float* x) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void shadamard(std::size_t n, const float* x, const float* y, float* z) {
    for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

float ssum(std::size_t n, const float* x) {
    float s = 0.0f;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

float sdot(std::size_t n, const float* x, const float* y) {
    float s = 0.0f;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void ssigmoid(std::size_t n, const float* x, float* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = 1.0f / (1.0f + std::exp(-x[i]));
}

void ssilu(std::size_t n, const float* x, float* y, float* sig) {
    for (std::size_t i = 0; i < n; ++i) {
        const float s = 1.0f / (1.0f + std::exp(-x[i]));
        sig[i] = s;
        y[i] = x[i] * s;
    }
}

void ssilu_bwd(std::size_t n, const float* dy, const float* x, const float* sig, float* dx) {
    for (std::size_t i = 0; i < n; ++i) {
        const float s = sig[i];
        dx[i] += dy[i] * (s + x[i] * s * (1.0f - s));
    }
}

void ssigmoid_bwd(std::size_t n, const float* dy, const float* y, float* dx) {
    for (std::size_t i = 0; i < n; ++i) dx[i] += dy[i] * y[i] * (1.0f - y[i]);
}

}  // namespace stssl::kernels::scalar
