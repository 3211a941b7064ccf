#pragma once

#include "stssl/autograd/graph.hpp"
#include "stssl/core/resample.hpp"

namespace stssl::autograd::ops {

/// Exact temporal reversal of a [T,H,W] map.
template <typename T>
typename Graph<T>::Var reverse_t(Graph<T>& g, typename Graph<T>::Var x) {
    const auto& s = x->value.shape();
    const int Tt = s[0];
    const std::size_t plane = static_cast<std::size_t>(s[1]) * s[2];
    Tensor<T> y(s);
    for (int t = 0; t < Tt; ++t)
        std::copy(x->value.data() + static_cast<std::size_t>(t) * plane,
                  x->value.data() + static_cast<std::size_t>(t + 1) * plane,
                  y.data() + static_cast<std::size_t>(Tt - 1 - t) * plane);
    return g.make(std::move(y), {x}, [x, Tt, plane](Node<T>& n) {
        T* dx = grad_of(x);
        if (!dx) return;
        for (int t = 0; t < Tt; ++t) {
            const T* go = n.grad.data() + static_cast<std::size_t>(Tt - 1 - t) * plane;
            T* dst = dx + static_cast<std::size_t>(t) * plane;
            for (std::size_t i = 0; i < plane; ++i) dst[i] += go[i];
        }
    });
}

/// Exact horizontal flip of a [T,H,W] map.
template <typename T>
typename Graph<T>::Var flip_w(Graph<T>& g, typename Graph<T>::Var x) {
    const auto& s = x->value.shape();
    const int W = s[2];
    const std::size_t rows = x->value.size() / static_cast<std::size_t>(W);
    Tensor<T> y(s);
    for (std::size_t r = 0; r < rows; ++r) {
        const T* src = x->value.data() + r * W;
        T* dst = y.data() + r * W;
        for (int w = 0; w < W; ++w) dst[w] = src[W - 1 - w];
    }
    return g.make(std::move(y), {x}, [x, W, rows](Node<T>& n) {
        T* dx = grad_of(x);
        if (!dx) return;
        for (std::size_t r = 0; r < rows; ++r) {
            const T* go = n.grad.data() + r * W;
            T* dst = dx + r * W;
            for (int w = 0; w < W; ++w) dst[w] += go[W - 1 - w];
        }
    });
}

/// Bilinear spatial resample of every frame of a [T,H,W] map through the
/// per-axis affine mapping src = a.s*dst + a.t. Linear in the input, so the
/// backward pass is the exact transpose scatter.
template <typename T>
typename Graph<T>::Var resample_hw(Graph<T>& g, typename Graph<T>::Var x, Affine1D ay,
                                   Affine1D ax, int oH, int oW, bool zero_fill) {
    const auto& s = x->value.shape();
    const int Tt = s[0], H = s[1], W = s[2];
    Tensor<T> y({Tt, oH, oW});
    for (int t = 0; t < Tt; ++t)
        resample_plane(x->value.data() + static_cast<std::size_t>(t) * H * W, H, W,
                       y.data() + static_cast<std::size_t>(t) * oH * oW, oH, oW, ay, ax,
                       zero_fill);
    return g.make(std::move(y), {x}, [x, ay, ax, Tt, H, W, oH, oW, zero_fill](Node<T>& n) {
        T* dx = grad_of(x);
        if (!dx) return;
        for (int t = 0; t < Tt; ++t)
            resample_plane_scatter(n.grad.data() + static_cast<std::size_t>(t) * oH * oW, H, W,
                                   dx + static_cast<std::size_t>(t) * H * W, oH, oW, ay, ax,
                                   zero_fill);
    });
}

}  // namespace stssl::autograd::ops
