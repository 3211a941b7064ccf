#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "stssl/autograd/graph.hpp"
#include "stssl/kernels/kernels.hpp"

namespace stssl::autograd::ops {

namespace detail {

template <typename T>
void silu_fwd(std::size_t n, const T* x, T* y, T* sig) {
    for (std::size_t i = 0; i < n; ++i) {
        const T s = T(1) / (T(1) + std::exp(-x[i]));
        sig[i] = s;
        y[i] = x[i] * s;
    }
}
template <>
inline void silu_fwd<float>(std::size_t n, const float* x, float* y, float* sig) {
    kernels::ssilu(n, x, y, sig);
}

template <typename T>
void silu_bwd(std::size_t n, const T* dy, const T* x, const T* sig, T* dx) {
    for (std::size_t i = 0; i < n; ++i) {
        const T s = sig[i];
        dx[i] += dy[i] * (s + x[i] * s * (T(1) - s));
    }
}
template <>
inline void silu_bwd<float>(std::size_t n, const float* dy, const float* x, const float* sig,
                            float* dx) {
    kernels::ssilu_bwd(n, dy, x, sig, dx);
}

template <typename T>
void sigmoid_fwd(std::size_t n, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
}
template <>
inline void sigmoid_fwd<float>(std::size_t n, const float* x, float* y) {
    kernels::ssigmoid(n, x, y);
}

template <typename T>
void sigmoid_bwd(std::size_t n, const T* dy, const T* y, T* dx) {
    for (std::size_t i = 0; i < n; ++i) dx[i] += dy[i] * y[i] * (T(1) - y[i]);
}
template <>
inline void sigmoid_bwd<float>(std::size_t n, const float* dy, const float* y, float* dx) {
    kernels::ssigmoid_bwd(n, dy, y, dx);
}

}  // namespace detail

template <typename T>
typename Graph<T>::Var silu(Graph<T>& g, typename Graph<T>::Var x) {
    Tensor<T> y(x->value.shape());
    Tensor<T> sig(x->value.shape());
    detail::silu_fwd(x->value.size(), x->value.data(), y.data(), sig.data());
    // The cached sigmoid rides in the closure for the backward pass.
    return g.make(std::move(y), {x}, [x, sig = std::move(sig)](Node<T>& n) {
        if (T* dx = grad_of(x))
            detail::silu_bwd(n.value.size(), n.grad.data(), x->value.data(), sig.data(), dx);
    });
}

template <typename T>
typename Graph<T>::Var sigmoid(Graph<T>& g, typename Graph<T>::Var x) {
    Tensor<T> y(x->value.shape());
    detail::sigmoid_fwd(x->value.size(), x->value.data(), y.data());
    return g.make(std::move(y), {x}, [x](Node<T>& n) {
        if (T* dx = grad_of(x)) detail::sigmoid_bwd(n.value.size(), n.grad.data(), n.value.data(), dx);
    });
}

template <typename T>
typename Graph<T>::Var add(Graph<T>& g, typename Graph<T>::Var a, typename Graph<T>::Var b) {
    if (!a->value.same_shape(b->value)) throw std::invalid_argument("add: shape mismatch");
    Tensor<T> y = a->value;
    kernels::add_into(y.size(), b->value.data(), y.data());
    return g.make(std::move(y), {a, b}, [a, b](Node<T>& n) {
        if (T* da = grad_of(a)) kernels::add_into(n.grad.size(), n.grad.data(), da);
        if (T* db = grad_of(b)) kernels::add_into(n.grad.size(), n.grad.data(), db);
    });
}

/// Linear combination of scalar nodes: sum_i coeff_i * v_i.
template <typename T>
typename Graph<T>::Var weighted_sum(Graph<T>& g,
                                    std::vector<std::pair<T, typename Graph<T>::Var>> terms) {
    Tensor<T> y({1});
    for (auto& [c, v] : terms) {
        if (v->value.size() != 1) throw std::invalid_argument("weighted_sum: non-scalar term");
        y[0] += c * v->value[0];
    }
    std::vector<typename Graph<T>::Var> parents;
    for (auto& [c, v] : terms) parents.push_back(v);
    return g.make(std::move(y), std::move(parents), [terms](Node<T>& n) {
        const T go = n.grad[0];
        for (auto& [c, v] : terms)
            if (T* dv = grad_of(v)) dv[0] += c * go;
    });
}

/// Copies into a new shape with identical element count.
template <typename T>
typename Graph<T>::Var reshape(Graph<T>& g, typename Graph<T>::Var x, std::vector<int> shape) {
    if (Tensor<T>::numel(shape) != x->value.size())
        throw std::invalid_argument("reshape: element count mismatch");
    Tensor<T> y(shape);
    std::copy(x->value.data(), x->value.data() + x->value.size(), y.data());
    return g.make(std::move(y), {x}, [x](Node<T>& n) {
        if (T* dx = grad_of(x)) kernels::add_into(n.grad.size(), n.grad.data(), dx);
    });
}

/// x: [C,T,H,W] -> mean over T -> [C,1,H,W].
template <typename T>
typename Graph<T>::Var mean_over_t(Graph<T>& g, typename Graph<T>::Var x) {
    const auto& s = x->value.shape();
    if (s.size() != 4) throw std::invalid_argument("mean_over_t: expected 4-d input");
    const int C = s[0], Tt = s[1], H = s[2], W = s[3];
    const std::size_t hw = static_cast<std::size_t>(H) * W;
    Tensor<T> y({C, 1, H, W});
    const T inv = T(1) / T(Tt);
    for (int c = 0; c < C; ++c) {
        T* dst = y.data() + c * hw;
        for (int t = 0; t < Tt; ++t) {
            const T* src = x->value.data() + (static_cast<std::size_t>(c) * Tt + t) * hw;
            for (std::size_t i = 0; i < hw; ++i) dst[i] += src[i];
        }
        for (std::size_t i = 0; i < hw; ++i) dst[i] *= inv;
    }
    return g.make(std::move(y), {x}, [x, C, Tt, hw, inv](Node<T>& n) {
        T* dx = grad_of(x);
        if (!dx) return;
        for (int c = 0; c < C; ++c) {
            const T* go = n.grad.data() + c * hw;
            for (int t = 0; t < Tt; ++t) {
                T* dst = dx + (static_cast<std::size_t>(c) * Tt + t) * hw;
                kernels::axpy(hw, inv, go, dst);
            }
        }
    });
}

/// Nearest-neighbor 2x spatial upsample: [C,T,H,W] -> [C,T,2H,2W].
template <typename T>
typename Graph<T>::Var upsample2x_hw(Graph<T>& g, typename Graph<T>::Var x) {
    const auto& s = x->value.shape();
    if (s.size() != 4) throw std::invalid_argument("upsample2x_hw: expected 4-d input");
    const int C = s[0], Tt = s[1], H = s[2], W = s[3];
    Tensor<T> y({C, Tt, 2 * H, 2 * W});
    const std::size_t planes = static_cast<std::size_t>(C) * Tt;
    for (std::size_t p = 0; p < planes; ++p) {
        const T* src = x->value.data() + p * H * W;
        T* dst = y.data() + p * (2 * H) * (2 * W);
        for (int h = 0; h < H; ++h) {
            const T* srow = src + static_cast<std::size_t>(h) * W;
            T* d0 = dst + static_cast<std::size_t>(2 * h) * (2 * W);
            T* d1 = d0 + 2 * W;
            for (int w = 0; w < W; ++w) {
                const T v = srow[w];
                d0[2 * w] = v;
                d0[2 * w + 1] = v;
                d1[2 * w] = v;
                d1[2 * w + 1] = v;
            }
        }
    }
    return g.make(std::move(y), {x}, [x, planes, H, W](Node<T>& n) {
        T* dx = grad_of(x);
        if (!dx) return;
        for (std::size_t p = 0; p < planes; ++p) {
            const T* go = n.grad.data() + p * (2 * H) * (2 * W);
            T* dst = dx + p * H * W;
            for (int h = 0; h < H; ++h) {
                const T* g0 = go + static_cast<std::size_t>(2 * h) * (2 * W);
                const T* g1 = g0 + 2 * W;
                T* drow = dst + static_cast<std::size_t>(h) * W;
                for (int w = 0; w < W; ++w)
                    drow[w] += g0[2 * w] + g0[2 * w + 1] + g1[2 * w] + g1[2 * w + 1];
            }
        }
    });
}

/// Channel concat of [Ca,T,H,W] and [Cb,T,H,W].
template <typename T>
typename Graph<T>::Var concat_c(Graph<T>& g, typename Graph<T>::Var a, typename Graph<T>::Var b) {
    const auto& sa = a->value.shape();
    const auto& sb = b->value.shape();
    if (sa.size() != 4 || sb.size() != 4 || sa[1] != sb[1] || sa[2] != sb[2] || sa[3] != sb[3])
        throw std::invalid_argument("concat_c: incompatible shapes");
    Tensor<T> y({sa[0] + sb[0], sa[1], sa[2], sa[3]});
    const std::size_t na = a->value.size(), nb = b->value.size();
    std::copy(a->value.data(), a->value.data() + na, y.data());
    std::copy(b->value.data(), b->value.data() + nb, y.data() + na);
    return g.make(std::move(y), {a, b}, [a, b, na, nb](Node<T>& n) {
        if (T* da = grad_of(a)) kernels::add_into(na, n.grad.data(), da);
        if (T* db = grad_of(b)) kernels::add_into(nb, n.grad.data() + na, db);
    });
}

/// Dense layer: x [n] -> w [m,n] * x + b [m].
template <typename T>
typename Graph<T>::Var dense(Graph<T>& g, typename Graph<T>::Var x, typename Graph<T>::Var w,
                             typename Graph<T>::Var b) {
    const int n = static_cast<int>(x->value.size());
    const int m = w->value.dim(0);
    if (w->value.dim(1) != n || static_cast<int>(b->value.size()) != m)
        throw std::invalid_argument("dense: shape mismatch");
    Tensor<T> y({m});
    kernels::gemm_nt(m, 1, n, w->value.data(), n, x->value.data(), n, y.data(), 1, false);
    for (int i = 0; i < m; ++i) y[i] += b->value[i];
    return g.make(std::move(y), {x, w, b}, [x, w, b, m, n](Node<T>& nd) {
        const T* go = nd.grad.data();
        if (T* dx = grad_of(x))
            kernels::gemm_nn(1, n, m, go, m, w->value.data(), n, dx, n, true);
        if (T* dw = grad_of(w))
            for (int i = 0; i < m; ++i) kernels::axpy(static_cast<std::size_t>(n), go[i], x->value.data(), dw + static_cast<std::size_t>(i) * n);
        if (T* db = grad_of(b))
            for (int i = 0; i < m; ++i) db[i] += go[i];
    });
}

/// Numerically stable softmax over a 1-d vector.
template <typename T>
typename Graph<T>::Var softmax1d(Graph<T>& g, typename Graph<T>::Var x) {
    const std::size_t n = x->value.size();
    Tensor<T> y(x->value.shape());
    T mx = x->value[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x->value[i]);
    T sum = T(0);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = std::exp(x->value[i] - mx);
        sum += y[i];
    }
    for (std::size_t i = 0; i < n; ++i) y[i] /= sum;
    return g.make(std::move(y), {x}, [x, n](Node<T>& nd) {
        T* dx = grad_of(x);
        if (!dx) return;
        const T* p = nd.value.data();
        const T* go = nd.grad.data();
        T dot = T(0);
        for (std::size_t i = 0; i < n; ++i) dot += go[i] * p[i];
        for (std::size_t i = 0; i < n; ++i) dx[i] += p[i] * (go[i] - dot);
    });
}

}  // namespace stssl::autograd::ops
