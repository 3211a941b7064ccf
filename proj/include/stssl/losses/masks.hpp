#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "stssl/core/tensor.hpp"

namespace stssl::losses {

enum class MaskKind { variance, gradient };

/// Non-negative per-pixel attention weights in [0,1]. Always detached: the
/// construction below works on plain values, so no gradient can flow through
/// a mask by design.
template <typename T>
struct AttentionMask {
    Tensor<T> weights;  // same shape as the map it reweights
    MaskKind kind = MaskKind::variance;
};

/// Per-pixel variance over a centered temporal window (raw, pre-normalization).
/// Window at frame t covers [t-window_past, t+window_future]; cyclic sequences
/// wrap indices, non-cyclic sequences clamp at the boundaries.
template <typename T>
Tensor<T> temporal_variance(const Tensor<T>& seq, int window_past = 2, int window_future = 2,
                            bool cyclic = false) {
    if (seq.ndim() != 3) throw std::invalid_argument("temporal_variance: expect [T,H,W]");
    const int L = seq.dim(0), H = seq.dim(1), W = seq.dim(2);
    const int n = window_past + window_future + 1;
    if (!cyclic && L < n)
        throw std::invalid_argument("temporal_variance: window larger than non-cyclic sequence");
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    Tensor<T> out(seq.shape());
    std::vector<const T*> frames(static_cast<std::size_t>(n));
    for (int t = 0; t < L; ++t) {
        for (int j = -window_past; j <= window_future; ++j) {
            int idx = t + j;
            if (cyclic) {
                idx = ((idx % L) + L) % L;
            } else {
                idx = std::min(L - 1, std::max(0, idx));
            }
            frames[static_cast<std::size_t>(j + window_past)] =
                seq.data() + static_cast<std::size_t>(idx) * plane;
        }
        T* dst = out.data() + static_cast<std::size_t>(t) * plane;
        const T inv = T(1) / T(n);
        for (std::size_t i = 0; i < plane; ++i) {
            T mu = T(0);
            for (int j = 0; j < n; ++j) mu += frames[static_cast<std::size_t>(j)][i];
            mu *= inv;
            T var = T(0);
            for (int j = 0; j < n; ++j) {
                const T d = frames[static_cast<std::size_t>(j)][i] - mu;
                var += d * d;
            }
            dst[i] = var * inv;
        }
    }
    return out;
}

/// |second temporal derivative| via nested central differences (raw,
/// pre-normalization). Interior frames are t in [2, T-3]; edges replicate the
/// nearest interior value. Requires T >= 5.
template <typename T>
Tensor<T> second_derivative_magnitude(const Tensor<T>& seq) {
    if (seq.ndim() != 3) throw std::invalid_argument("second_derivative: expect [T,H,W]");
    const int L = seq.dim(0), H = seq.dim(1), W = seq.dim(2);
    if (L < 5)
        throw std::invalid_argument(
            "second_derivative: need at least 5 frames for nested central differences");
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    Tensor<T> out(seq.shape());
    auto frame = [&](int t) { return seq.data() + static_cast<std::size_t>(t) * plane; };
    for (int t = 2; t <= L - 3; ++t) {
        // d_{t+1} = (x_{t+2}-x_t)/2, d_{t-1} = (x_t - x_{t-2})/2,
        // s_t = (d_{t+1}-d_{t-1})/2 = (x_{t+2} - 2 x_t + x_{t-2})/4.
        const T* xm2 = frame(t - 2);
        const T* x0 = frame(t);
        const T* xp2 = frame(t + 2);
        T* dst = out.data() + static_cast<std::size_t>(t) * plane;
        for (std::size_t i = 0; i < plane; ++i)
            dst[i] = std::abs((xp2[i] - T(2) * x0[i] + xm2[i]) * T(0.25));
    }
    for (int t = 0; t < 2; ++t)
        std::copy(out.data() + 2 * plane, out.data() + 3 * plane,
                  out.data() + static_cast<std::size_t>(t) * plane);
    for (int t = L - 2; t < L; ++t)
        std::copy(out.data() + static_cast<std::size_t>(L - 3) * plane,
                  out.data() + static_cast<std::size_t>(L - 2) * plane,
                  out.data() + static_cast<std::size_t>(t) * plane);
    return out;
}

/// Per-clip min-max normalization to [0,1] with an epsilon guard. When a
/// validity mask is given, the range is taken over valid pixels and invalid
/// pixels map to 0 (their weights never enter the loss anyway).
template <typename T>
Tensor<T> normalize_minmax(const Tensor<T>& raw, const Tensor<std::uint8_t>* valid = nullptr,
                           T eps = T(1e-8)) {
    if (valid && valid->size() != raw.size())
        throw std::invalid_argument("normalize_minmax: validity shape mismatch");
    T lo = std::numeric_limits<T>::max();
    T hi = std::numeric_limits<T>::lowest();
    bool any = false;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (valid && !(*valid)[i]) continue;
        lo = std::min(lo, raw[i]);
        hi = std::max(hi, raw[i]);
        any = true;
    }
    Tensor<T> out(raw.shape());
    if (!any) return out;
    const T range = hi - lo + eps;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (valid && !(*valid)[i]) continue;
        out[i] = (raw[i] - lo) / range;
    }
    return out;
}

template <typename T>
AttentionMask<T> variance_mask(const Tensor<T>& loc_seq, int window_past = 2,
                               int window_future = 2, bool cyclic = false,
                               const Tensor<std::uint8_t>* valid = nullptr) {
    AttentionMask<T> m;
    m.kind = MaskKind::variance;
    m.weights = normalize_minmax(temporal_variance(loc_seq, window_past, window_future, cyclic),
                                 valid);
    return m;
}

template <typename T>
AttentionMask<T> gradient_mask(const Tensor<T>& loc_seq,
                               const Tensor<std::uint8_t>* valid = nullptr) {
    AttentionMask<T> m;
    m.kind = MaskKind::gradient;
    m.weights = normalize_minmax(second_derivative_magnitude(loc_seq), valid);
    return m;
}

/// Slices the leading `n` frames of a [L,H,W] tensor.
template <typename T>
Tensor<T> take_frames(const Tensor<T>& seq, int n) {
    const int H = seq.dim(1), W = seq.dim(2);
    if (n > seq.dim(0)) throw std::invalid_argument("take_frames: n exceeds sequence length");
    Tensor<T> out({n, H, W});
    std::copy(seq.data(), seq.data() + out.size(), out.data());
    return out;
}

}  // namespace stssl::losses
