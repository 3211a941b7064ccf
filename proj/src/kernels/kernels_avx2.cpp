// AVX2+FMA variants of the float32 kernels. Compiled with -mavx2 -mfma and
// reached only through the runtime dispatch table in kernels.cpp.

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace stssl::kernels::avx2 {

namespace {

inline float hsum8(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 1));
    return _mm_cvtss_f32(lo);
}

// Cephes-style expf, ~2 ulp over the clamped range.
inline __m256 expf8(__m256 x) {
    const __m256 hi = _mm256_set1_ps(88.3762626647949f);
    const __m256 lo = _mm256_set1_ps(-87.3365478515625f);
    x = _mm256_min_ps(_mm256_max_ps(x, lo), hi);

    const __m256 log2e = _mm256_set1_ps(1.44269504088896341f);
    __m256 kf = _mm256_round_ps(_mm256_mul_ps(x, log2e),
                                _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    const __m256 ln2_hi = _mm256_set1_ps(0.693359375f);
    const __m256 ln2_lo = _mm256_set1_ps(-2.12194440e-4f);
    __m256 r = _mm256_fnmadd_ps(kf, ln2_hi, x);
    r = _mm256_fnmadd_ps(kf, ln2_lo, r);

    __m256 p = _mm256_set1_ps(1.9875691500e-4f);
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(1.3981999507e-3f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(8.3334519073e-3f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(4.1665795894e-2f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(1.6666665459e-1f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(5.0000001201e-1f));
    const __m256 one = _mm256_set1_ps(1.0f);
    p = _mm256_fmadd_ps(p, _mm256_mul_ps(r, r), _mm256_add_ps(r, one));

    __m256i ki = _mm256_cvtps_epi32(kf);
    __m256i ebits = _mm256_slli_epi32(_mm256_add_epi32(ki, _mm256_set1_epi32(127)), 23);
    return _mm256_mul_ps(p, _mm256_castsi256_ps(ebits));
}

inline __m256 sigmoid8(__m256 x) {
    const __m256 one = _mm256_set1_ps(1.0f);
    __m256 e = expf8(_mm256_sub_ps(_mm256_setzero_ps(), x));
    return _mm256_div_ps(one, _mm256_add_ps(one, e));
}

// C tile MR x 16 over the full K range.
template <int MR>
void ker_nn_16(int K, const float* A, int lda, const float* B, int ldb, float* C, int ldc,
               bool accumulate) {
    __m256 acc0[MR], acc1[MR];
    for (int i = 0; i < MR; ++i) {
        if (accumulate) {
            acc0[i] = _mm256_loadu_ps(C + static_cast<std::size_t>(i) * ldc);
            acc1[i] = _mm256_loadu_ps(C + static_cast<std::size_t>(i) * ldc + 8);
        } else {
            acc0[i] = _mm256_setzero_ps();
            acc1[i] = _mm256_setzero_ps();
        }
    }
    for (int k = 0; k < K; ++k) {
        const float* brow = B + static_cast<std::size_t>(k) * ldb;
        const __m256 b0 = _mm256_loadu_ps(brow);
        const __m256 b1 = _mm256_loadu_ps(brow + 8);
        for (int i = 0; i < MR; ++i) {
            const __m256 a = _mm256_broadcast_ss(A + static_cast<std::size_t>(i) * lda + k);
            acc0[i] = _mm256_fmadd_ps(a, b0, acc0[i]);
            acc1[i] = _mm256_fmadd_ps(a, b1, acc1[i]);
        }
    }
    for (int i = 0; i < MR; ++i) {
        _mm256_storeu_ps(C + static_cast<std::size_t>(i) * ldc, acc0[i]);
        _mm256_storeu_ps(C + static_cast<std::size_t>(i) * ldc + 8, acc1[i]);
    }
}

template <int MR>
void ker_nn_8(int K, const float* A, int lda, const float* B, int ldb, float* C, int ldc,
              bool accumulate) {
    __m256 acc[MR];
    for (int i = 0; i < MR; ++i)
        acc[i] = accumulate ? _mm256_loadu_ps(C + static_cast<std::size_t>(i) * ldc)
                            : _mm256_setzero_ps();
    for (int k = 0; k < K; ++k) {
        const __m256 b = _mm256_loadu_ps(B + static_cast<std::size_t>(k) * ldb);
        for (int i = 0; i < MR; ++i) {
            const __m256 a = _mm256_broadcast_ss(A + static_cast<std::size_t>(i) * lda + k);
            acc[i] = _mm256_fmadd_ps(a, b, acc[i]);
        }
    }
    for (int i = 0; i < MR; ++i)
        _mm256_storeu_ps(C + static_cast<std::size_t>(i) * ldc, acc[i]);
}

void block_nn_16(int mr, int K, const float* A, int lda, const float* B, int ldb, float* C,
                 int ldc, bool acc) {
    switch (mr) {
        case 6: ker_nn_16<6>(K, A, lda, B, ldb, C, ldc, acc); break;
        case 5: ker_nn_16<5>(K, A, lda, B, ldb, C, ldc, acc); break;
        case 4: ker_nn_16<4>(K, A, lda, B, ldb, C, ldc, acc); break;
        case 3: ker_nn_16<3>(K, A, lda, B, ldb, C, ldc, acc); break;
        case 2: ker_nn_16<2>(K, A, lda, B, ldb, C, ldc, acc); break;
        default: ker_nn_16<1>(K, A, lda, B, ldb, C, ldc, acc); break;
    }
}

void block_nn_8(int mr, int K, const float* A, int lda, const float* B, int ldb, float* C,
                int ldc, bool acc) {
    switch (mr) {
        case 6: ker_nn_8<6>(K, A, lda, B, ldb, C, ldc, acc); break;
        case 5: ker_nn_8<5>(K, A, lda, B, ldb, C, ldc, acc); break;
        case 4: ker_nn_8<4>(K, A, lda, B, ldb, C, ldc, acc); break;
        case 3: ker_nn_8<3>(K, A, lda, B, ldb, C, ldc, acc); break;
        case 2: ker_nn_8<2>(K, A, lda, B, ldb, C, ldc, acc); break;
        default: ker_nn_8<1>(K, A, lda, B, ldb, C, ldc, acc); break;
    }
}

// MR x NR dot-product tile for the NT case; K is the contraction length.
template <int MR, int NR>
void ker_nt(int K, const float* A, int lda, const float* B, int ldb, float* C, int ldc,
            bool accumulate) {
    __m256 acc[MR][NR];
    for (int i = 0; i < MR; ++i)
        for (int j = 0; j < NR; ++j) acc[i][j] = _mm256_setzero_ps();
    int k = 0;
    for (; k + 8 <= K; k += 8) {
        __m256 a[MR], b[NR];
        for (int i = 0; i < MR; ++i)
            a[i] = _mm256_loadu_ps(A + static_cast<std::size_t>(i) * lda + k);
        for (int j = 0; j < NR; ++j)
            b[j] = _mm256_loadu_ps(B + static_cast<std::size_t>(j) * ldb + k);
        for (int i = 0; i < MR; ++i)
            for (int j = 0; j < NR; ++j) acc[i][j] = _mm256_fmadd_ps(a[i], b[j], acc[i][j]);
    }
    for (int i = 0; i < MR; ++i) {
        for (int j = 0; j < NR; ++j) {
            float s = hsum8(acc[i][j]);
            for (int kt = k; kt < K; ++kt)
                s += A[static_cast<std::size_t>(i) * lda + kt] *
                     B[static_cast<std::size_t>(j) * ldb + kt];
            float* c = C + static_cast<std::size_t>(i) * ldc + j;
            *c = accumulate ? *c + s : s;
        }
    }
}

template <int MR>
void block_nt_rows(int N, int K, const float* A, int lda, const float* B, int ldb, float* C,
                   int ldc, bool acc) {
    int n = 0;
    for (; n + 2 <= N; n += 2)
        ker_nt<MR, 2>(K, A, lda, B + static_cast<std::size_t>(n) * ldb, ldb, C + n, ldc, acc);
    if (n < N)
        ker_nt<MR, 1>(K, A, lda, B + static_cast<std::size_t>(n) * ldb, ldb, C + n, ldc, acc);
}

}  // namespace

void sgemm_nn(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
              float* C, int ldc, bool accumulate) {
    int n0 = 0;
    for (; n0 + 16 <= N; n0 += 16) {
        for (int m0 = 0; m0 < M; m0 += 6) {
            const int mr = (M - m0) < 6 ? (M - m0) : 6;
            block_nn_16(mr, K, A + static_cast<std::size_t>(m0) * lda, lda, B + n0, ldb,
                        C + static_cast<std::size_t>(m0) * ldc + n0, ldc, accumulate);
        }
    }
    if (n0 + 8 <= N) {
        for (int m0 = 0; m0 < M; m0 += 6) {
            const int mr = (M - m0) < 6 ? (M - m0) : 6;
            block_nn_8(mr, K, A + static_cast<std::size_t>(m0) * lda, lda, B + n0, ldb,
                       C + static_cast<std::size_t>(m0) * ldc + n0, ldc, accumulate);
        }
        n0 += 8;
    }
    if (n0 < N) {
        // Scalar tail, at most 7 columns.
        for (int m = 0; m < M; ++m) {
            float* crow = C + static_cast<std::size_t>(m) * ldc;
            for (int n = n0; n < N; ++n) {
                float s = accumulate ? crow[n] : 0.0f;
                for (int k = 0; k < K; ++k)
                    s += A[static_cast<std::size_t>(m) * lda + k] *
                         B[static_cast<std::size_t>(k) * ldb + n];
                crow[n] = s;
            }
        }
    }
}

void sgemm_nt(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
              float* C, int ldc, bool accumulate) {
    int m0 = 0;
    for (; m0 + 4 <= M; m0 += 4)
        block_nt_rows<4>(N, K, A + static_cast<std::size_t>(m0) * lda, lda, B, ldb,
                         C + static_cast<std::size_t>(m0) * ldc, ldc, accumulate);
    const int mr = M - m0;
    const float* a = A + static_cast<std::size_t>(m0) * lda;
    float* c = C + static_cast<std::size_t>(m0) * ldc;
    switch (mr) {
        case 3: block_nt_rows<3>(N, K, a, lda, B, ldb, c, ldc, accumulate); break;
        case 2: block_nt_rows<2>(N, K, a, lda, B, ldb, c, ldc, accumulate); break;
        case 1: block_nt_rows<1>(N, K, a, lda, B, ldb, c, ldc, accumulate); break;
        default: break;
    }
}

void saxpy(std::size_t n, float a, const float* x, float* y) {
    const __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void sadd(std::size_t n, const float* x, float* y) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    for (; i < n; ++i) y[i] += x[i];
}

void sscale(std::size_t n, float a, float* x) {
    const __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

void shadamard(std::size_t n, const float* x, const float* y, float* z) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(z + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    for (; i < n; ++i) z[i] = x[i] * y[i];
}

float ssum(std::size_t n, const float* x) {
    __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_add_ps(acc0, _mm256_loadu_ps(x + i));
        acc1 = _mm256_add_ps(acc1, _mm256_loadu_ps(x + i + 8));
    }
    float s = hsum8(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) s += x[i];
    return s;
}

float sdot(std::size_t n, const float* x, const float* y) {
    __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), acc1);
    }
    float s = hsum8(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void ssigmoid(std::size_t n, const float* x, float* y) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, sigmoid8(_mm256_loadu_ps(x + i)));
    for (; i < n; ++i) y[i] = 1.0f / (1.0f + std::exp(-x[i]));
}

void ssilu(std::size_t n, const float* x, float* y, float* sig) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vx = _mm256_loadu_ps(x + i);
        const __m256 s = sigmoid8(vx);
        _mm256_storeu_ps(sig + i, s);
        _mm256_storeu_ps(y + i, _mm256_mul_ps(vx, s));
    }
    for (; i < n; ++i) {
        const float s = 1.0f / (1.0f + std::exp(-x[i]));
        sig[i] = s;
        y[i] = x[i] * s;
    }
}

void ssilu_bwd(std::size_t n, const float* dy, const float* x, const float* sig, float* dx) {
    const __m256 one = _mm256_set1_ps(1.0f);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 s = _mm256_loadu_ps(sig + i);
        const __m256 vx = _mm256_loadu_ps(x + i);
        const __m256 d = _mm256_fmadd_ps(_mm256_mul_ps(vx, s), _mm256_sub_ps(one, s), s);
        _mm256_storeu_ps(dx + i, _mm256_fmadd_ps(_mm256_loadu_ps(dy + i), d, _mm256_loadu_ps(dx + i)));
    }
    for (; i < n; ++i) {
        const float s = sig[i];
        dx[i] += dy[i] * (s + x[i] * s * (1.0f - s));
    }
}

void ssigmoid_bwd(std::size_t n, const float* dy, const float* y, float* dx) {
    const __m256 one = _mm256_set1_ps(1.0f);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vy = _mm256_loadu_ps(y + i);
        const __m256 d = _mm256_mul_ps(vy, _mm256_sub_ps(one, vy));
        _mm256_storeu_ps(dx + i, _mm256_fmadd_ps(_mm256_loadu_ps(dy + i), d, _mm256_loadu_ps(dx + i)));
    }
    for (; i < n; ++i) dx[i] += dy[i] * y[i] * (1.0f - y[i]);
}

}  // namespace stssl::kernels::avx2
