#pragma once

#include <stdexcept>

#include "stssl/autograd/graph.hpp"
#include "stssl/kernels/kernels.hpp"

namespace stssl::autograd::ops {

namespace detail {

struct ConvDims {
    int Cin, T, H, W;
    int Cout, kt, kh, kw;
    int st, sh, sw;
    int pt, ph, pw;
    int To, Ho, Wo;
    int ksize;  // Cin*kt*kh*kw
};

inline ConvDims conv_dims(const std::vector<int>& xs, const std::vector<int>& ws, int st, int sh,
                          int sw) {
    if (xs.size() != 4 || ws.size() != 5) throw std::invalid_argument("conv3d: bad ranks");
    ConvDims d;
    d.Cin = xs[0];
    d.T = xs[1];
    d.H = xs[2];
    d.W = xs[3];
    d.Cout = ws[0];
    d.kt = ws[2];
    d.kh = ws[3];
    d.kw = ws[4];
    if (ws[1] != d.Cin) throw std::invalid_argument("conv3d: channel mismatch");
    if (d.kt % 2 == 0 || d.kh % 2 == 0 || d.kw % 2 == 0)
        throw std::invalid_argument("conv3d: kernels must be odd for same padding");
    d.st = st;
    d.sh = sh;
    d.sw = sw;
    d.pt = d.kt / 2;
    d.ph = d.kh / 2;
    d.pw = d.kw / 2;
    d.To = (d.T + 2 * d.pt - d.kt) / st + 1;
    d.Ho = (d.H + 2 * d.ph - d.kh) / sh + 1;
    d.Wo = (d.W + 2 * d.pw - d.kw) / sw + 1;
    d.ksize = d.Cin * d.kt * d.kh * d.kw;
    return d;
}

/// Fills the patch matrix for one output frame: B[ksize x Ho*Wo].
template <typename T>
void im2col_frame(const T* x, const ConvDims& d, int to, T* B) {
    const int HoWo = d.Ho * d.Wo;
    int r = 0;
    for (int cin = 0; cin < d.Cin; ++cin) {
        const T* xc = x + static_cast<std::size_t>(cin) * d.T * d.H * d.W;
        for (int dt = 0; dt < d.kt; ++dt) {
            const int t = to * d.st + dt - d.pt;
            const bool t_ok = (t >= 0 && t < d.T);
            const T* xt = xc + static_cast<std::size_t>(t) * d.H * d.W;
            for (int dh = 0; dh < d.kh; ++dh) {
                for (int dw = 0; dw < d.kw; ++dw, ++r) {
                    T* row = B + static_cast<std::size_t>(r) * HoWo;
                    if (!t_ok) {
                        for (int i = 0; i < HoWo; ++i) row[i] = T(0);
                        continue;
                    }
                    for (int ho = 0; ho < d.Ho; ++ho) {
                        const int h = ho * d.sh + dh - d.ph;
                        T* out = row + static_cast<std::size_t>(ho) * d.Wo;
                        if (h < 0 || h >= d.H) {
                            for (int wo = 0; wo < d.Wo; ++wo) out[wo] = T(0);
                            continue;
                        }
                        const T* xrow = xt + static_cast<std::size_t>(h) * d.W;
                        for (int wo = 0; wo < d.Wo; ++wo) {
                            const int w = wo * d.sw + dw - d.pw;
                            out[wo] = (w >= 0 && w < d.W) ? xrow[w] : T(0);
                        }
                    }
                }
            }
        }
    }
}

/// Scatter-adds the patch-space gradient back onto the input gradient.
template <typename T>
void col2im_frame_add(const T* B, const ConvDims& d, int to, T* dx) {
    const int HoWo = d.Ho * d.Wo;
    int r = 0;
    for (int cin = 0; cin < d.Cin; ++cin) {
        T* xc = dx + static_cast<std::size_t>(cin) * d.T * d.H * d.W;
        for (int dt = 0; dt < d.kt; ++dt) {
            const int t = to * d.st + dt - d.pt;
            const bool t_ok = (t >= 0 && t < d.T);
            T* xt = xc + static_cast<std::size_t>(t) * d.H * d.W;
            for (int dh = 0; dh < d.kh; ++dh) {
                for (int dw = 0; dw < d.kw; ++dw, ++r) {
                    if (!t_ok) continue;
                    const T* row = B + static_cast<std::size_t>(r) * HoWo;
                    for (int ho = 0; ho < d.Ho; ++ho) {
                        const int h = ho * d.sh + dh - d.ph;
                        if (h < 0 || h >= d.H) continue;
                        T* xrow = xt + static_cast<std::size_t>(h) * d.W;
                        const T* in = row + static_cast<std::size_t>(ho) * d.Wo;
                        for (int wo = 0; wo < d.Wo; ++wo) {
                            const int w = wo * d.sw + dw - d.pw;
                            if (w >= 0 && w < d.W) xrow[w] += in[wo];
                        }
                    }
                }
            }
        }
    }
}

}  // namespace detail

/// 3-d convolution with 'same' padding over [Cin,T,H,W].
/// w: [Cout,Cin,kt,kh,kw], b: [Cout], strides (st,sh,sw).
template <typename T>
typename Graph<T>::Var conv3d(Graph<T>& g, typename Graph<T>::Var x, typename Graph<T>::Var w,
                              typename Graph<T>::Var b, int st = 1, int sh = 1, int sw = 1) {
    using detail::ConvDims;
    const ConvDims d = detail::conv_dims(x->value.shape(), w->value.shape(), st, sh, sw);
    if (static_cast<int>(b->value.size()) != d.Cout)
        throw std::invalid_argument("conv3d: bias size mismatch");

    const int HoWo = d.Ho * d.Wo;
    const std::size_t out_plane = static_cast<std::size_t>(d.To) * HoWo;
    Tensor<T> y({d.Cout, d.To, d.Ho, d.Wo});

    auto& B = g.scratch(0, static_cast<std::size_t>(d.ksize) * HoWo);
    for (int to = 0; to < d.To; ++to) {
        detail::im2col_frame(x->value.data(), d, to, B.data());
        // C slice for frame `to`: rows are output channels with stride To*Ho*Wo.
        kernels::gemm_nn(d.Cout, HoWo, d.ksize, w->value.data(), d.ksize, B.data(), HoWo,
                         y.data() + static_cast<std::size_t>(to) * HoWo,
                         static_cast<int>(out_plane), false);
    }
    for (int c = 0; c < d.Cout; ++c) {
        T* plane = y.data() + c * out_plane;
        const T bias = b->value[c];
        for (std::size_t i = 0; i < out_plane; ++i) plane[i] += bias;
    }

    return g.make(std::move(y), {x, w, b}, [&g, x, w, b, d, HoWo, out_plane](Node<T>& n) {
        const T* go = n.grad.data();
        T* dx = grad_of(x);
        T* dw = grad_of(w);
        T* db = grad_of(b);

        if (db) {
            for (int c = 0; c < d.Cout; ++c) {
                const T* plane = go + c * out_plane;
                T s = T(0);
                for (std::size_t i = 0; i < out_plane; ++i) s += plane[i];
                db[c] += s;
            }
        }
        if (!dx && !dw) return;

        auto& B = g.scratch(0, static_cast<std::size_t>(d.ksize) * HoWo);
        std::vector<T>* wt = nullptr;
        if (dx) {
            // W^T [ksize x Cout] once per call.
            auto& buf = g.scratch(1, static_cast<std::size_t>(d.ksize) * d.Cout);
            for (int c = 0; c < d.Cout; ++c)
                for (int k = 0; k < d.ksize; ++k)
                    buf[static_cast<std::size_t>(k) * d.Cout + c] =
                        w->value[static_cast<std::size_t>(c) * d.ksize + k];
            wt = &buf;
        }
        std::vector<T> dB;
        if (dx) dB.resize(static_cast<std::size_t>(d.ksize) * HoWo);

        for (int to = 0; to < d.To; ++to) {
            const T* go_t = go + static_cast<std::size_t>(to) * HoWo;
            if (dw) {
                detail::im2col_frame(x->value.data(), d, to, B.data());
                // dW += dOut_slice * B^T
                kernels::gemm_nt(d.Cout, d.ksize, HoWo, go_t, static_cast<int>(out_plane),
                                 B.data(), HoWo, dw, d.ksize, true);
            }
            if (dx) {
                // dB = W^T * dOut_slice, then scatter back.
                kernels::gemm_nn(d.ksize, HoWo, d.Cout, wt->data(), d.Cout, go_t,
                                 static_cast<int>(out_plane), dB.data(), HoWo, false);
                detail::col2im_frame_add(dB.data(), d, to, dx);
            }
        }
    });
}

}  // namespace stssl::autograd::ops
