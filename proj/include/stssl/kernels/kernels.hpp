#pragma once

#include <cstddef>

namespace stssl::kernels {

/// Instruction set actually driving the float32 kernels.
enum class Isa { scalar, avx2 };

/// Active ISA. Picked once at first use: AVX2 when the CPU supports it,
/// unless STSSL_FORCE_SCALAR=1 or select_isa() overrode the choice.
Isa active_isa();

/// Test hook; also resets the dispatch table. Returns the ISA now in effect
/// (a request for avx2 on a non-AVX2 host falls back to scalar).
Isa select_isa(Isa isa);

// ---------------------------------------------------------------------------
// float32 kernels, runtime-dispatched.
//
// GEMM layouts are row-major with explicit leading dimensions (elements).
//   gemm_nn: C[MxN] = A[MxK] * B[KxN]      (+= when accumulate)
//   gemm_nt: C[MxN] = A[MxK] * B[NxK]^T    (+= when accumulate)
// ---------------------------------------------------------------------------

void sgemm_nn(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
              float* C, int ldc, bool accumulate);
void sgemm_nt(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
              float* C, int ldc, bool accumulate);

void saxpy(std::size_t n, float a, const float* x, float* y);  // y += a*x
void sadd(std::size_t n, const float* x, float* y);            // y += x
void sscale(std::size_t n, float a, float* x);                 // x *= a
void shadamard(std::size_t n, const float* x, const float* y, float* z);  // z = x*y
float ssum(std::size_t n, const float* x);
float sdot(std::size_t n, const float* x, const float* y);

void ssigmoid(std::size_t n, const float* x, float* y);            // y = 1/(1+e^-x)
void ssilu(std::size_t n, const float* x, float* y, float* sig);   // y = x*sig, sig = sigmoid(x)
/// dx += dy * (sig + x*sig*(1-sig)), the SiLU derivative given cached sigmoid.
void ssilu_bwd(std::size_t n, const float* dy, const float* x, const float* sig, float* dx);
/// dx += dy * y * (1-y) for y = sigmoid(x).
void ssigmoid_bwd(std::size_t n, const float* dy, const float* y, float* dx);

// Reference implementations (always available; used by equivalence tests).
namespace scalar {
void sgemm_nn(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
              float* C, int ldc, bool accumulate);
void sgemm_nt(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
              float* C, int ldc, bool accumulate);
void saxpy(std::size_t n, float a, const float* x, float* y);
void sadd(std::size_t n, const float* x, float* y);
void sscale(std::size_t n, float a, float* x);
void shadamard(std::size_t n, const float* x, const float* y, float* z);
float ssum(std::size_t n, const float* x);
float sdot(std::size_t n, const float* x, const float* y);
void ssigmoid(std::size_t n, const float* x, float* y);
void ssilu(std::size_t n, const float* x, float* y, float* sig);
void ssilu_bwd(std::size_t n, const float* dy, const float* x, const float* sig, float* dx);
void ssigmoid_bwd(std::size_t n, const float* dy, const float* y, float* dx);
}  // namespace scalar

// ---------------------------------------------------------------------------
// Precision-generic front. float routes through the dispatch table above,
// every other scalar type gets the reference loop nest. The toy double path
// used by gradient-check oracles only ever sees tiny problems.
// ---------------------------------------------------------------------------

template <typename T>
void gemm_nn(int M, int N, int K, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
             bool accumulate) {
    for (int m = 0; m < M; ++m) {
        T* crow = C + static_cast<std::size_t>(m) * ldc;
        if (!accumulate)
            for (int n = 0; n < N; ++n) crow[n] = T(0);
        for (int k = 0; k < K; ++k) {
            const T a = A[static_cast<std::size_t>(m) * lda + k];
            if (a == T(0)) continue;
            const T* brow = B + static_cast<std::size_t>(k) * ldb;
            for (int n = 0; n < N; ++n) crow[n] += a * brow[n];
        }
    }
}

template <typename T>
void gemm_nt(int M, int N, int K, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
             bool accumulate) {
    for (int m = 0; m < M; ++m) {
        const T* arow = A + static_cast<std::size_t>(m) * lda;
        T* crow = C + static_cast<std::size_t>(m) * ldc;
        for (int n = 0; n < N; ++n) {
            const T* brow = B + static_cast<std::size_t>(n) * ldb;
            T acc = T(0);
            for (int k = 0; k < K; ++k) acc += arow[k] * brow[k];
            if (accumulate) crow[n] += acc;
            else crow[n] = acc;
        }
    }
}

template <>
inline void gemm_nn<float>(int M, int N, int K, const float* A, int lda, const float* B,
                           int ldb, float* C, int ldc, bool accumulate) {
    sgemm_nn(M, N, K, A, lda, B, ldb, C, ldc, accumulate);
}

template <>
inline void gemm_nt<float>(int M, int N, int K, const float* A, int lda, const float* B,
                           int ldb, float* C, int ldc, bool accumulate) {
    sgemm_nt(M, N, K, A, lda, B, ldb, C, ldc, accumulate);
}

template <typename T>
void axpy(std::size_t n, T a, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}
template <>
inline void axpy<float>(std::size_t n, float a, const float* x, float* y) {
    saxpy(n, a, x, y);
}

template <typename T>
void add_into(std::size_t n, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}
template <>
inline void add_into<float>(std::size_t n, const float* x, float* y) {
    sadd(n, x, y);
}

template <typename T>
T dot(std::size_t n, const T* x, const T* y) {
    T s = T(0);
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}
template <>
inline float dot<float>(std::size_t n, const float* x, const float* y) {
    return sdot(n, x, y);
}

}  // namespace stssl::kernels
