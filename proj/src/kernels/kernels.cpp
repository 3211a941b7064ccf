#include "stssl/kernels/kernels.hpp"

#include <atomic>
#include <cstdlib>

namespace stssl::kernels {

#ifdef STSSL_HAVE_AVX2_TU
namespace avx2 {
void sgemm_nn(int, int, int, const float*, int, const float*, int, float*, int, bool);
void sgemm_nt(int, int, int, const float*, int, const float*, int, float*, int, bool);
void saxpy(std::size_t, float, const float*, float*);
void sadd(std::size_t, const float*, float*);
void sscale(std::size_t, float, float*);
void shadamard(std::size_t, const float*, const float*, float*);
float ssum(std::size_t, const float*);
float sdot(std::size_t, const float*, const float*);
void ssigmoid(std::size_t, const float*, float*);
void ssilu(std::size_t, const float*, float*, float*);
void ssilu_bwd(std::size_t, const float*, const float*, const float*, float*);
void ssigmoid_bwd(std::size_t, const float*, const float*, float*);
}  // namespace avx2
#endif

namespace {

struct Table {
    Isa isa;
    void (*gemm_nn)(int, int, int, const float*, int, const float*, int, float*, int, bool);
    void (*gemm_nt)(int, int, int, const float*, int, const float*, int, float*, int, bool);
    void (*axpy)(std::size_t, float, const float*, float*);
    void (*add)(std::size_t, const float*, float*);
    void (*scale)(std::size_t, float, float*);
    void (*hadamard)(std::size_t, const float*, const float*, float*);
    float (*sum)(std::size_t, const float*);
    float (*dot)(std::size_t, const float*, const float*);
    void (*sigmoid)(std::size_t, const float*, float*);
    void (*silu)(std::size_t, const float*, float*, float*);
    void (*silu_bwd)(std::size_t, const float*, const float*, const float*, float*);
    void (*sigmoid_bwd)(std::size_t, const float*, const float*, float*);
};

constexpr Table kScalarTable = {
    Isa::scalar,      scalar::sgemm_nn, scalar::sgemm_nt, scalar::saxpy,
    scalar::sadd,     scalar::sscale,   scalar::shadamard, scalar::ssum,
    scalar::sdot,     scalar::ssigmoid, scalar::ssilu,     scalar::ssilu_bwd,
    scalar::ssigmoid_bwd,
};

#ifdef STSSL_HAVE_AVX2_TU
constexpr Table kAvx2Table = {
    Isa::avx2,      avx2::sgemm_nn, avx2::sgemm_nt, avx2::saxpy,
    avx2::sadd,     avx2::sscale,   avx2::shadamard, avx2::ssum,
    avx2::sdot,     avx2::ssigmoid, avx2::ssilu,     avx2::ssilu_bwd,
    avx2::ssigmoid_bwd,
};
#endif

bool host_supports_avx2() {
#ifdef STSSL_HAVE_AVX2_TU
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Table* pick_default() {
    if (const char* env = std::getenv("STSSL_FORCE_SCALAR"); env && env[0] == '1')
        return &kScalarTable;
#ifdef STSSL_HAVE_AVX2_TU
    if (host_supports_avx2()) return &kAvx2Table;
#endif
    return &kScalarTable;
}

std::atomic<const Table*> g_table{nullptr};

const Table& table() {
    const Table* t = g_table.load(std::memory_order_acquire);
    if (!t) {
        t = pick_default();
        g_table.store(t, std::memory_order_release);
    }
    return *t;
}

}  // namespace

Isa active_isa() { return table().isa; }

Isa select_isa(Isa isa) {
    const Table* t = &kScalarTable;
#ifdef STSSL_HAVE_AVX2_TU
    if (isa == Isa::avx2 && host_supports_avx2()) t = &kAvx2Table;
#else
    (void)isa;
#endif
    g_table.store(t, std::memory_order_release);
    return t->isa;
}

void sgemm_nn(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
              float* C, int ldc, bool accumulate) {
    table().gemm_nn(M, N, K, A, lda, B, ldb, C, ldc, accumulate);
}
void sgemm_nt(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
              float* C, int ldc, bool accumulate) {
    table().gemm_nt(M, N, K, A, lda, B, ldb, C, ldc, accumulate);
}
void saxpy(std::size_t n, float a, const float* x, float* y) { table().axpy(n, a, x, y); }
void sadd(std::size_t n, const float* x, float* y) { table().add(n, x, y); }
void sscale(std::size_t n, float a, float* x) { table().scale(n, a, x); }
void shadamard(std::size_t n, const float* x, const float* y, float* z) {
    table().hadamard(n, x, y, z);
}
float ssum(std::size_t n, const float* x) { return table().sum(n, x); }
float sdot(std::size_t n, const float* x, const float* y) { return table().dot(n, x, y); }
void ssigmoid(std::size_t n, const float* x, float* y) { table().sigmoid(n, x, y); }
void ssilu(std::size_t n, const float* x, float* y, float* sig) { table().silu(n, x, y, sig); }
void ssilu_bwd(std::size_t n, const float* dy, const float* x, const float* sig, float* dx) {
    table().silu_bwd(n, dy, x, sig, dx);
}
void ssigmoid_bwd(std::size_t n, const float* dy, const float* y, float* dx) {
    table().sigmoid_bwd(n, dy, y, dx);
}

}  // namespace stssl::kernels
