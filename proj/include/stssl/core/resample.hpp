#pragma once

#include <cmath>

#include "stssl/core/tensor.hpp"

namespace stssl {

/// Per-axis affine pixel mapping: src = s * dst + t (pixel index units).
struct Affine1D {
    double s = 1.0;
    double t = 0.0;
};

/// True when the mapping lands exactly on integer pixel indices for every
/// destination index (pure flips, identity, integer shifts).
inline bool affine_is_integer(const Affine1D& a) {
    return (a.s == 1.0 || a.s == -1.0) && a.t == std::floor(a.t);
}

namespace resample_detail {

struct Tap {
    int i0, i1;
    double w1;   // weight of i1; weight of i0 is 1-w1
    bool valid;  // source center within [0, n-1]
};

inline Tap make_tap(double src, int n) {
    Tap t;
    t.valid = (src >= 0.0 && src <= static_cast<double>(n - 1));
    double f = std::floor(src);
    t.i0 = static_cast<int>(f);
    t.w1 = src - f;
    if (t.i0 < 0) {
        t.i0 = 0;
        t.w1 = 0.0;
    }
    if (t.i0 >= n - 1) {
        t.i0 = n - 1;
        t.w1 = 0.0;
    }
    t.i1 = (t.i0 + 1 < n) ? t.i0 + 1 : t.i0;
    return t;
}

}  // namespace resample_detail

/// Bilinear resample of a single [H,W] plane with per-axis affine mappings.
/// zero_fill: destinations whose source center falls outside the frame get 0
/// (otherwise taps clamp at the border).
template <typename T>
void resample_plane(const T* src, int H, int W, T* dst, int oH, int oW, const Affine1D& ay,
                    const Affine1D& ax, bool zero_fill) {
    using resample_detail::make_tap;
    std::vector<resample_detail::Tap> xt(static_cast<std::size_t>(oW));
    for (int x = 0; x < oW; ++x) xt[static_cast<std::size_t>(x)] = make_tap(ax.s * x + ax.t, W);
    for (int y = 0; y < oH; ++y) {
        const auto ty = make_tap(ay.s * y + ay.t, H);
        T* drow = dst + static_cast<std::size_t>(y) * oW;
        if (zero_fill && !ty.valid) {
            for (int x = 0; x < oW; ++x) drow[x] = T(0);
            continue;
        }
        const T* r0 = src + static_cast<std::size_t>(ty.i0) * W;
        const T* r1 = src + static_cast<std::size_t>(ty.i1) * W;
        const double wy1 = ty.w1, wy0 = 1.0 - ty.w1;
        for (int x = 0; x < oW; ++x) {
            const auto& tx = xt[static_cast<std::size_t>(x)];
            if (zero_fill && !tx.valid) {
                drow[x] = T(0);
                continue;
            }
            const double wx1 = tx.w1, wx0 = 1.0 - tx.w1;
            const double v = wy0 * (wx0 * static_cast<double>(r0[tx.i0]) +
                                    wx1 * static_cast<double>(r0[tx.i1])) +
                             wy1 * (wx0 * static_cast<double>(r1[tx.i0]) +
                                    wx1 * static_cast<double>(r1[tx.i1]));
            drow[x] = static_cast<T>(v);
        }
    }
}

/// Scatter counterpart: accumulates dst-plane gradients back onto the source.
template <typename T>
void resample_plane_scatter(const T* ddst, int H, int W, T* dsrc, int oH, int oW,
                            const Affine1D& ay, const Affine1D& ax, bool zero_fill) {
    using resample_detail::make_tap;
    std::vector<resample_detail::Tap> xt(static_cast<std::size_t>(oW));
    for (int x = 0; x < oW; ++x) xt[static_cast<std::size_t>(x)] = make_tap(ax.s * x + ax.t, W);
    for (int y = 0; y < oH; ++y) {
        const auto ty = make_tap(ay.s * y + ay.t, H);
        if (zero_fill && !ty.valid) continue;
        const double wy1 = ty.w1, wy0 = 1.0 - ty.w1;
        const T* grow = ddst + static_cast<std::size_t>(y) * oW;
        T* r0 = dsrc + static_cast<std::size_t>(ty.i0) * W;
        T* r1 = dsrc + static_cast<std::size_t>(ty.i1) * W;
        for (int x = 0; x < oW; ++x) {
            const auto& tx = xt[static_cast<std::size_t>(x)];
            if (zero_fill && !tx.valid) continue;
            const double go = static_cast<double>(grow[x]);
            const double wx1 = tx.w1, wx0 = 1.0 - tx.w1;
            r0[tx.i0] += static_cast<T>(go * wy0 * wx0);
            r0[tx.i1] += static_cast<T>(go * wy0 * wx1);
            r1[tx.i0] += static_cast<T>(go * wy1 * wx0);
            r1[tx.i1] += static_cast<T>(go * wy1 * wx1);
        }
    }
}

}  // namespace stssl
