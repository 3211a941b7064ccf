#pragma once

#include <cmath>
#include <stdexcept>

#include "stssl/autograd/graph.hpp"
#include "stssl/kernels/kernels.hpp"

namespace stssl::autograd::ops {

/// Row-wise squash: v = s * |s| / (1 + |s|^2), applied to each length-D row.
/// Keeps every output row norm in [0,1).
template <typename T>
typename Graph<T>::Var caps_squash_rows(Graph<T>& g, typename Graph<T>::Var x) {
    const auto& s = x->value.shape();
    const int D = s.back();
    const int N = static_cast<int>(x->value.size()) / D;
    Tensor<T> y(s);
    for (int i = 0; i < N; ++i) {
        const T* row = x->value.data() + static_cast<std::size_t>(i) * D;
        T* out = y.data() + static_cast<std::size_t>(i) * D;
        T sq = T(0);
        for (int j = 0; j < D; ++j) sq += row[j] * row[j];
        const T r = std::sqrt(sq);
        const T coef = r / (T(1) + sq);
        for (int j = 0; j < D; ++j) out[j] = row[j] * coef;
    }
    return g.make(std::move(y), {x}, [x, N, D](Node<T>& n) {
        T* dx = grad_of(x);
        if (!dx) return;
        for (int i = 0; i < N; ++i) {
            const T* row = x->value.data() + static_cast<std::size_t>(i) * D;
            const T* gv = n.grad.data() + static_cast<std::size_t>(i) * D;
            T* out = dx + static_cast<std::size_t>(i) * D;
            T sq = T(0), dot = T(0);
            for (int j = 0; j < D; ++j) {
                sq += row[j] * row[j];
                dot += row[j] * gv[j];
            }
            const T r = std::sqrt(sq);
            const T denom = T(1) + sq;
            const T coef = r / denom;
            // d coef/d r = (1 - r^2) / (1 + r^2)^2 ; contribution via s_b = (dcoef/r) s_b (s.gv)
            const T k = (r > T(1e-30)) ? (T(1) - sq) / (denom * denom * r) : T(0);
            for (int j = 0; j < D; ++j) out[j] += coef * gv[j] + k * row[j] * dot;
        }
    });
}

/// Rearranges a pooled feature map [types*d, 1, H, W] into per-position
/// primary capsules [H*W, types, d].
template <typename T>
typename Graph<T>::Var caps_arrange(Graph<T>& g, typename Graph<T>::Var x, int types, int d) {
    const auto& s = x->value.shape();
    if (s.size() != 4 || s[0] != types * d || s[1] != 1)
        throw std::invalid_argument("caps_arrange: expected [types*d,1,H,W]");
    const int H = s[2], W = s[3];
    const int P = H * W;
    Tensor<T> y({P, types, d});
    for (int ty = 0; ty < types; ++ty)
        for (int j = 0; j < d; ++j) {
            const T* src = x->value.data() + (static_cast<std::size_t>(ty) * d + j) * P;
            for (int p = 0; p < P; ++p)
                y[(static_cast<std::size_t>(p) * types + ty) * d + j] = src[p];
        }
    return g.make(std::move(y), {x}, [x, types, d, P](Node<T>& n) {
        T* dx = grad_of(x);
        if (!dx) return;
        for (int ty = 0; ty < types; ++ty)
            for (int j = 0; j < d; ++j) {
                T* dst = dx + (static_cast<std::size_t>(ty) * d + j) * P;
                for (int p = 0; p < P; ++p)
                    dst[p] += n.grad[(static_cast<std::size_t>(p) * types + ty) * d + j];
            }
    });
}

/// Prediction vectors: u [P,types,d_in] x w [types,K,d_in,d_out] -> uhat [P,types,K,d_out].
template <typename T>
typename Graph<T>::Var caps_predict(Graph<T>& g, typename Graph<T>::Var u,
                                    typename Graph<T>::Var w) {
    const auto& us = u->value.shape();
    const auto& ws = w->value.shape();
    if (us.size() != 3 || ws.size() != 4 || us[1] != ws[0] || us[2] != ws[2])
        throw std::invalid_argument("caps_predict: shape mismatch");
    const int P = us[0], types = us[1], din = us[2];
    const int K = ws[1], dout = ws[3];

    Tensor<T> y({P, types, K, dout});
    const int lda = types * din;
    const int ldc = types * K * dout;
    for (int ty = 0; ty < types; ++ty) {
        for (int k = 0; k < K; ++k) {
            const T* wmat = w->value.data() + (static_cast<std::size_t>(ty) * K + k) * din * dout;
            kernels::gemm_nn(P, dout, din, u->value.data() + static_cast<std::size_t>(ty) * din,
                             lda, wmat, dout,
                             y.data() + (static_cast<std::size_t>(ty) * K + k) * dout, ldc, false);
        }
    }
    return g.make(std::move(y), {u, w}, [u, w, P, types, din, K, dout, lda, ldc](Node<T>& n) {
        T* du = grad_of(u);
        T* dw = grad_of(w);
        const T* go = n.grad.data();
        for (int ty = 0; ty < types; ++ty) {
            for (int k = 0; k < K; ++k) {
                const T* gslice = go + (static_cast<std::size_t>(ty) * K + k) * dout;
                const T* wmat =
                    w->value.data() + (static_cast<std::size_t>(ty) * K + k) * din * dout;
                if (du) {
                    // du[p,ty,:] += g[p,ty,k,:] * W^T
                    kernels::gemm_nt(P, din, dout, gslice, ldc, wmat, dout,
                                     du + static_cast<std::size_t>(ty) * din, lda, true);
                }
                if (dw) {
                    T* dwm = dw + (static_cast<std::size_t>(ty) * K + k) * din * dout;
                    for (int p = 0; p < P; ++p) {
                        const T* urow =
                            u->value.data() + (static_cast<std::size_t>(p) * types + ty) * din;
                        const T* grow = gslice + static_cast<std::size_t>(p) * ldc;
                        for (int i = 0; i < din; ++i)
                            kernels::axpy(static_cast<std::size_t>(dout), urow[i], grow,
                                          dwm + static_cast<std::size_t>(i) * dout);
                    }
                }
            }
        }
    });
}

/// Row-wise softmax over the last axis of [N,K] routing logits.
template <typename T>
typename Graph<T>::Var caps_softmax_rows(Graph<T>& g, typename Graph<T>::Var b) {
    const auto& s = b->value.shape();
    const int K = s.back();
    const int N = static_cast<int>(b->value.size()) / K;
    Tensor<T> y(s);
    for (int i = 0; i < N; ++i) {
        const T* row = b->value.data() + static_cast<std::size_t>(i) * K;
        T* out = y.data() + static_cast<std::size_t>(i) * K;
        T mx = row[0];
        for (int j = 1; j < K; ++j) mx = std::max(mx, row[j]);
        T sum = T(0);
        for (int j = 0; j < K; ++j) {
            out[j] = std::exp(row[j] - mx);
            sum += out[j];
        }
        for (int j = 0; j < K; ++j) out[j] /= sum;
    }
    return g.make(std::move(y), {b}, [b, N, K](Node<T>& n) {
        T* db = grad_of(b);
        if (!db) return;
        for (int i = 0; i < N; ++i) {
            const T* p = n.value.data() + static_cast<std::size_t>(i) * K;
            const T* gv = n.grad.data() + static_cast<std::size_t>(i) * K;
            T* out = db + static_cast<std::size_t>(i) * K;
            T dot = T(0);
            for (int j = 0; j < K; ++j) dot += gv[j] * p[j];
            for (int j = 0; j < K; ++j) out[j] += p[j] * (gv[j] - dot);
        }
    });
}

/// Coupled mix: c [N,K] (uhat [N,K,D]) -> s [K,D], s_k = sum_n c[n,k] uhat[n,k,:].
template <typename T>
typename Graph<T>::Var caps_mix(Graph<T>& g, typename Graph<T>::Var c,
                                typename Graph<T>::Var uhat) {
    const auto& cs = c->value.shape();
    const auto& us = uhat->value.shape();
    const int D = us.back();
    const int K = cs.back();
    const int N = static_cast<int>(c->value.size()) / K;
    if (static_cast<int>(uhat->value.size()) != N * K * D)
        throw std::invalid_argument("caps_mix: shape mismatch");
    Tensor<T> y({K, D});
    for (int n = 0; n < N; ++n) {
        const T* crow = c->value.data() + static_cast<std::size_t>(n) * K;
        const T* urow = uhat->value.data() + static_cast<std::size_t>(n) * K * D;
        for (int k = 0; k < K; ++k)
            kernels::axpy(static_cast<std::size_t>(D), crow[k], urow + static_cast<std::size_t>(k) * D,
                          y.data() + static_cast<std::size_t>(k) * D);
    }
    return g.make(std::move(y), {c, uhat}, [c, uhat, N, K, D](Node<T>& nd) {
        T* dc = grad_of(c);
        T* du = grad_of(uhat);
        const T* gs = nd.grad.data();
        for (int n = 0; n < N; ++n) {
            const T* urow = uhat->value.data() + static_cast<std::size_t>(n) * K * D;
            const T* crow = c->value.data() + static_cast<std::size_t>(n) * K;
            for (int k = 0; k < K; ++k) {
                const T* gk = gs + static_cast<std::size_t>(k) * D;
                if (dc)
                    dc[static_cast<std::size_t>(n) * K + k] +=
                        kernels::dot(static_cast<std::size_t>(D), urow + static_cast<std::size_t>(k) * D, gk);
                if (du)
                    kernels::axpy(static_cast<std::size_t>(D), crow[k], gk,
                                  du + (static_cast<std::size_t>(n) * K + k) * D);
            }
        }
    });
}

/// Agreement: a [N,K] with a[n,k] = uhat[n,k,:] . v[k,:].
template <typename T>
typename Graph<T>::Var caps_agree(Graph<T>& g, typename Graph<T>::Var uhat,
                                  typename Graph<T>::Var v) {
    const auto& us = uhat->value.shape();
    const int D = us.back();
    const auto& vs = v->value.shape();
    const int K = vs[0];
    const int N = static_cast<int>(uhat->value.size()) / (K * D);
    Tensor<T> y({N, K});
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k)
            y[static_cast<std::size_t>(n) * K + k] = kernels::dot(
                static_cast<std::size_t>(D),
                uhat->value.data() + (static_cast<std::size_t>(n) * K + k) * D,
                v->value.data() + static_cast<std::size_t>(k) * D);
    return g.make(std::move(y), {uhat, v}, [uhat, v, N, K, D](Node<T>& nd) {
        T* du = grad_of(uhat);
        T* dv = grad_of(v);
        const T* ga = nd.grad.data();
        for (int n = 0; n < N; ++n) {
            for (int k = 0; k < K; ++k) {
                const T go = ga[static_cast<std::size_t>(n) * K + k];
                if (go == T(0)) continue;
                if (du)
                    kernels::axpy(static_cast<std::size_t>(D), go,
                                  v->value.data() + static_cast<std::size_t>(k) * D,
                                  du + (static_cast<std::size_t>(n) * K + k) * D);
                if (dv)
                    kernels::axpy(static_cast<std::size_t>(D), go,
                                  uhat->value.data() + (static_cast<std::size_t>(n) * K + k) * D,
                                  dv + static_cast<std::size_t>(k) * D);
            }
        }
    });
}

/// Row norms of [K,D] capsule poses -> class confidences [K].
template <typename T>
typename Graph<T>::Var caps_norm_rows(Graph<T>& g, typename Graph<T>::Var v) {
    const auto& vs = v->value.shape();
    const int D = vs.back();
    const int K = static_cast<int>(v->value.size()) / D;
    Tensor<T> y({K});
    for (int k = 0; k < K; ++k) {
        T sq = T(0);
        const T* row = v->value.data() + static_cast<std::size_t>(k) * D;
        for (int j = 0; j < D; ++j) sq += row[j] * row[j];
        y[k] = std::sqrt(sq);
    }
    return g.make(std::move(y), {v}, [v, K, D](Node<T>& nd) {
        T* dv = grad_of(v);
        if (!dv) return;
        for (int k = 0; k < K; ++k) {
            const T r = nd.value[k];
            if (r <= T(1e-30)) continue;
            const T go = nd.grad[k] / r;
            kernels::axpy(static_cast<std::size_t>(D), go,
                          v->value.data() + static_cast<std::size_t>(k) * D,
                          dv + static_cast<std::size_t>(k) * D);
        }
    });
}

}  // namespace stssl::autograd::ops
