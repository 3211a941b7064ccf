#pragma once

#include <optional>

#include "stssl/augment/augment.hpp"
#include "stssl/losses/losses.hpp"
#include "stssl/model/network.hpp"

namespace stssl::trainer {

/// Precomputed attention masks. Normally masks are rebuilt from the current
/// forward values (and stay detached); freezing them instead is what the
/// finite-difference harness needs to probe the differentiable path alone.
template <typename T>
struct FrozenMasks {
    std::optional<Tensor<T>> variance;
    std::optional<Tensor<T>> gradient;
};

template <typename T>
struct ItemLossResult {
    typename autograd::Graph<T>::Var objective = nullptr;  // batch-scaled contribution
    losses::LossBreakdown parts;       // raw per-item component values
    FrozenMasks<T> masks_used;         // values of the masks that entered the loss
};

/// Builds the full two-view loss for one batch item on the given tape.
///
/// The per-item objective is scaled so that summing it over the batch equals
/// the batch loss: supervised terms carry 1/n_labeled, consistency terms 1/B.
/// `record` must be null exactly in supervised mode.
template <typename T>
ItemLossResult<T> build_item_loss(autograd::Graph<T>& g, const model::Network<T>& net,
                                  const std::vector<typename autograd::Graph<T>::Var>& params,
                                  const dataio::BatchItem& item,
                                  const augment::AugRecord* record, losses::Mode mode,
                                  const losses::LossWeights& lw, int coherence_window,
                                  losses::Mode both_variant, double inv_labeled,
                                  double inv_batch, const FrozenMasks<T>* frozen = nullptr) {
    namespace ops = autograd::ops;
    using Var = typename autograd::Graph<T>::Var;
    using losses::Mode;

    ItemLossResult<T> out;
    Var clip_a = g.constant(model::clip_to_chw<T>(item.clip));
    auto fwd_a = net.forward(g, params, clip_a);

    Var cc = nullptr, lc = nullptr;
    if (mode != Mode::supervised) {
        if (!record) throw std::invalid_argument("build_item_loss: missing augmentation record");
        const dataio::Clip aug = augment::apply_to_clip(item.clip, *record);
        Var clip_b = g.constant(model::clip_to_chw<T>(aug));
        auto fwd_b = net.forward(g, params, clip_b);

        const int H = fwd_b.loc->value.dim(1), W = fwd_b.loc->value.dim(2);
        Var loc_b_inv = fwd_b.loc;
        for (const auto& step : augment::inversion_plan(*record, H, W)) {
            switch (step.kind) {
                case augment::InversionStep::reverse_time:
                    loc_b_inv = ops::reverse_t(g, loc_b_inv);
                    break;
                case augment::InversionStep::flip_x:
                    loc_b_inv = ops::flip_w(g, loc_b_inv);
                    break;
                case augment::InversionStep::resample:
                    loc_b_inv = ops::resample_hw(g, loc_b_inv, step.ay, step.ax, H, W, true);
                    break;
            }
        }
        Tensor<std::uint8_t> valid =
            augment::validity_mask(*record, fwd_b.loc->value.dim(0), H, W);

        if (losses::mode_uses_cc(mode))
            cc = losses::jsd_consistency(g, fwd_a.penultimate, fwd_b.penultimate);

        const Mode variant = (mode == Mode::semi_both) ? both_variant : mode;
        if (losses::mode_uses_loc_consistency(mode)) {
            if (variant == Mode::semi_lc) {
                lc = losses::l2_consistency(g, fwd_a.loc, loc_b_inv, valid);
            } else if (variant == Mode::semi_var) {
                losses::AttentionMask<T> mask;
                mask.kind = losses::MaskKind::variance;
                if (frozen && frozen->variance) {
                    mask.weights = *frozen->variance;
                } else {
                    // Cyclic variance over [o_1..o_n, g_{n-1}..g_2], sliced back
                    // to the clip's frames; built from values only (detached).
                    const Tensor<T> cyc =
                        augment::build_cyclic_sequence(fwd_a.loc->value, loc_b_inv->value);
                    const Tensor<T> raw = losses::temporal_variance(
                        cyc, coherence_window, coherence_window, /*cyclic=*/true);
                    mask.weights = losses::normalize_minmax(
                        losses::take_frames(raw, fwd_a.loc->value.dim(0)), &valid);
                }
                out.masks_used.variance = mask.weights;
                lc = losses::coherence_loss(g, fwd_a.loc, loc_b_inv, valid, mask,
                                            static_cast<T>(lw.w));
            } else {  // semi-grad
                losses::AttentionMask<T> mask;
                mask.kind = losses::MaskKind::gradient;
                if (frozen && frozen->gradient) {
                    mask.weights = *frozen->gradient;
                } else {
                    mask.weights = losses::normalize_minmax(
                        losses::second_derivative_magnitude(fwd_a.loc->value), &valid);
                }
                out.masks_used.gradient = mask.weights;
                lc = losses::gradient_smoothness_loss(g, fwd_a.loc, loc_b_inv, valid, mask);
            }
        }
    }

    Var sup_cls = nullptr, sup_loc = nullptr;
    if (item.labeled) {
        sup_cls = losses::margin_loss<T>(g, fwd_a.class_scores, item.class_id);
        sup_loc = losses::bce_dice_loss<T>(g, fwd_a.loc, item.gt.cast<T>());
    }

    out.parts.sup_cls = sup_cls ? static_cast<double>(sup_cls->scalar()) : 0.0;
    out.parts.sup_loc = sup_loc ? static_cast<double>(sup_loc->scalar()) : 0.0;
    out.parts.cc = cc ? static_cast<double>(cc->scalar()) : 0.0;
    out.parts.lc = lc ? static_cast<double>(lc->scalar()) : 0.0;
    out.parts.w = lw.w;
    out.parts.lambda = lw.lambda_total;

    auto scale = [&](Var v, double c) -> Var {
        if (!v) return nullptr;
        return ops::weighted_sum<T>(g, {{static_cast<T>(c), v}});
    };
    out.objective = losses::total_loss(g, scale(sup_cls, inv_labeled), scale(sup_loc, inv_labeled),
                                       scale(cc, inv_batch), scale(lc, inv_batch), lw, mode);
    return out;
}

}  // namespace stssl::trainer
