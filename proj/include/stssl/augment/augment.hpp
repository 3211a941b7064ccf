#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "stssl/core/resample.hpp"
#include "stssl/core/rng.hpp"
#include "stssl/core/tensor.hpp"
#include "stssl/dataio/types.hpp"

namespace stssl::augment {

enum class TransformKind { hflip, crop_resize, photometric, temporal_reverse };
enum class Strength { weak, strong };

struct Transform {
    TransformKind kind = TransformKind::hflip;
    // crop_resize: normalized crop box
    double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
    // photometric
    double brightness = 0, contrast = 1, saturation = 1;

    bool geometric() const {
        return kind == TransformKind::hflip || kind == TransformKind::crop_resize ||
               kind == TransformKind::temporal_reverse;
    }
};

/// Recorded, invertible augmentation A(v). Photometric members are marked
/// non-geometric and invert to the identity on localization maps.
struct AugRecord {
    std::vector<Transform> transforms;
    Strength strength = Strength::weak;
};

AugRecord sample_augmentation(Strength strength, Rng& rng);

dataio::Clip apply_to_clip(const dataio::Clip& clip, const AugRecord& record);

nlohmann::json record_to_json(const AugRecord& record);
AugRecord record_from_json(const nlohmann::json& j);

/// Inverse-resampling affine for a crop box, mapping original-grid pixel
/// indices to augmented-grid source positions.
inline void crop_inverse_affine(const Transform& t, int H, int W, Affine1D& ay, Affine1D& ax) {
    const double sx = t.x1 - t.x0;
    const double sy = t.y1 - t.y0;
    if (sx <= 1e-9 || sy <= 1e-9) throw std::invalid_argument("degenerate crop");
    ax.s = 1.0 / sx;
    ax.t = (0.5 - t.x0 * W) / sx - 0.5;
    ay.s = 1.0 / sy;
    ay.t = (0.5 - t.y0 * H) / sy - 0.5;
}

/// Forward-resampling affine for a crop box (augmented pixel -> source pixel).
inline void crop_forward_affine(const Transform& t, int H, int W, Affine1D& ay, Affine1D& ax) {
    const double sx = t.x1 - t.x0;
    const double sy = t.y1 - t.y0;
    if (sx <= 1e-9 || sy <= 1e-9) throw std::invalid_argument("degenerate crop");
    ax.s = sx;
    ax.t = t.x0 * W + 0.5 * sx - 0.5;
    ay.s = sy;
    ay.t = t.y0 * H + 0.5 * sy - 0.5;
}

/// One step of the localization-map inversion, executed in reverse record
/// order with photometric members skipped.
struct InversionStep {
    enum Kind { reverse_time, flip_x, resample } kind;
    Affine1D ay, ax;  // resample only
};

inline std::vector<InversionStep> inversion_plan(const AugRecord& record, int H, int W) {
    std::vector<InversionStep> plan;
    for (auto it = record.transforms.rbegin(); it != record.transforms.rend(); ++it) {
        switch (it->kind) {
            case TransformKind::photometric:
                break;
            case TransformKind::temporal_reverse:
                plan.push_back({InversionStep::reverse_time, {}, {}});
                break;
            case TransformKind::hflip:
                plan.push_back({InversionStep::flip_x, {}, {}});
                break;
            case TransformKind::crop_resize: {
                InversionStep s{InversionStep::resample, {}, {}};
                crop_inverse_affine(*it, H, W, s.ay, s.ax);
                plan.push_back(s);
                break;
            }
        }
    }
    return plan;
}

namespace detail {

template <typename T>
Tensor<T> reverse_time_tensor(const Tensor<T>& x) {
    const int Tt = x.dim(0);
    const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
    Tensor<T> y(x.shape());
    for (int t = 0; t < Tt; ++t)
        std::copy(x.data() + static_cast<std::size_t>(t) * plane,
                  x.data() + static_cast<std::size_t>(t + 1) * plane,
                  y.data() + static_cast<std::size_t>(Tt - 1 - t) * plane);
    return y;
}

template <typename T>
Tensor<T> flip_x_tensor(const Tensor<T>& x) {
    const int W = x.dim(x.ndim() - 1);
    const std::size_t rows = x.size() / static_cast<std::size_t>(W);
    Tensor<T> y(x.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const T* src = x.data() + r * W;
        T* dst = y.data() + r * W;
        for (int w = 0; w < W; ++w) dst[w] = src[W - 1 - w];
    }
    return y;
}

}  // namespace detail

/// Inverts the record's geometric transforms on a [T,H,W] localization map
/// (pure-value version). Outside-crop pixels are filled with 0.
template <typename T>
Tensor<T> invert_on_localization(const Tensor<T>& loc, const AugRecord& record) {
    if (loc.ndim() != 3) throw std::invalid_argument("invert_on_localization: expect [T,H,W]");
    const int H = loc.dim(1), W = loc.dim(2);
    Tensor<T> cur = loc;
    for (const auto& step : inversion_plan(record, H, W)) {
        switch (step.kind) {
            case InversionStep::reverse_time:
                cur = detail::reverse_time_tensor(cur);
                break;
            case InversionStep::flip_x:
                cur = detail::flip_x_tensor(cur);
                break;
            case InversionStep::resample: {
                Tensor<T> out(cur.shape());
                const int Tt = cur.dim(0);
                for (int t = 0; t < Tt; ++t)
                    resample_plane(cur.data() + static_cast<std::size_t>(t) * H * W, H, W,
                                   out.data() + static_cast<std::size_t>(t) * H * W, H, W,
                                   step.ay, step.ax, true);
                cur = std::move(out);
                break;
            }
        }
    }
    return cur;
}

/// Pixels with defined values in both views after inversion. Derived purely
/// from the record geometry: the mask is pushed through the same inversion
/// plan as the map, so later flips relocate the out-of-crop region correctly.
inline Tensor<std::uint8_t> validity_mask(const AugRecord& record, int T, int H, int W) {
    Tensor<std::uint8_t> valid({T, H, W}, 1);
    for (const auto& step : inversion_plan(record, H, W)) {
        switch (step.kind) {
            case InversionStep::reverse_time:
                valid = detail::reverse_time_tensor(valid);
                break;
            case InversionStep::flip_x:
                valid = detail::flip_x_tensor(valid);
                break;
            case InversionStep::resample: {
                Tensor<std::uint8_t> out({T, H, W});
                for (int y = 0; y < H; ++y) {
                    const auto ty = resample_detail::make_tap(step.ay.s * y + step.ay.t, H);
                    for (int x = 0; x < W; ++x) {
                        const auto tx = resample_detail::make_tap(step.ax.s * x + step.ax.t, W);
                        if (!ty.valid || !tx.valid) continue;
                        for (int t = 0; t < T; ++t) {
                            // Conservative: all four bilinear taps must be valid.
                            out.at3(t, y, x) = valid.at3(t, ty.i0, tx.i0) &&
                                               valid.at3(t, ty.i0, tx.i1) &&
                                               valid.at3(t, ty.i1, tx.i0) &&
                                               valid.at3(t, ty.i1, tx.i1);
                        }
                    }
                }
                valid = std::move(out);
                break;
            }
        }
    }
    return valid;
}

/// Cyclic sequence for the variance mask: [o_1..o_n, g_{n-1}..g_2], i.e. the
/// temporally flipped augmented view appended without its two seam frames.
/// Traversing the result cyclically is temporally continuous.
template <typename T>
Tensor<T> build_cyclic_sequence(const Tensor<T>& loc_orig, const Tensor<T>& loc_aug_inverted) {
    if (!loc_orig.same_shape(loc_aug_inverted))
        throw std::invalid_argument("build_cyclic_sequence: shape mismatch");
    if (loc_orig.ndim() != 3) throw std::invalid_argument("build_cyclic_sequence: expect [T,H,W]");
    const int n = loc_orig.dim(0);
    if (n < 2) throw std::invalid_argument("build_cyclic_sequence: need n >= 2");
    const int H = loc_orig.dim(1), W = loc_orig.dim(2);
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    Tensor<T> out({2 * n - 2, H, W});
    for (int t = 0; t < n; ++t)
        std::copy(loc_orig.data() + static_cast<std::size_t>(t) * plane,
                  loc_orig.data() + static_cast<std::size_t>(t + 1) * plane,
                  out.data() + static_cast<std::size_t>(t) * plane);
    // Flipped augmented view is [g_n..g_1]; dropping its first and last
    // frames leaves g_{n-1}..g_2.
    for (int i = 0; i < n - 2; ++i) {
        const int src = n - 2 - i;  // g_{n-1}, g_{n-2}, ..., g_2 (0-based n-2..1)
        std::copy(loc_aug_inverted.data() + static_cast<std::size_t>(src) * plane,
                  loc_aug_inverted.data() + static_cast<std::size_t>(src + 1) * plane,
                  out.data() + static_cast<std::size_t>(n + i) * plane);
    }
    return out;
}

}  // namespace stssl::augment
