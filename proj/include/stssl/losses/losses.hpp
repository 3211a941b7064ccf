#pragma once

#include <optional>
#include <string>

#include "stssl/autograd/autograd.hpp"
#include "stssl/losses/masks.hpp"

namespace stssl::losses {

enum class Mode { supervised, semi_cc, semi_lc, semi_var, semi_grad, semi_both };

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::supervised: return "supervised";
        case Mode::semi_cc: return "semi-cc";
        case Mode::semi_lc: return "semi-lc";
        case Mode::semi_var: return "semi-var";
        case Mode::semi_grad: return "semi-grad";
        case Mode::semi_both: return "semi-both";
    }
    return "?";
}

inline Mode mode_from_string(const std::string& s) {
    if (s == "supervised") return Mode::supervised;
    if (s == "semi-cc") return Mode::semi_cc;
    if (s == "semi-lc") return Mode::semi_lc;
    if (s == "semi-var") return Mode::semi_var;
    if (s == "semi-grad") return Mode::semi_grad;
    if (s == "semi-both") return Mode::semi_both;
    throw std::invalid_argument("unknown mode '" + s + "'");
}

inline bool mode_uses_cc(Mode m) { return m == Mode::semi_cc || m == Mode::semi_both; }
inline bool mode_uses_loc_consistency(Mode m) {
    return m == Mode::semi_lc || m == Mode::semi_var || m == Mode::semi_grad ||
           m == Mode::semi_both;
}

struct LossWeights {
    double lambda_total = 0.1;  // Eq. 9 weight on the consistency block
    double lambda_cls = 0.3;    // Eq. 8 classification consistency weight
    double lambda_loc = 0.7;    // Eq. 8 spatio-temporal consistency weight
    double w = 0.0;             // Eq. 3 blend, ramped during training
};

/// Per-step component values (already batch-reduced), logged as a JSON line.
struct LossBreakdown {
    double sup_cls = 0, sup_loc = 0, cc = 0, lc = 0;
    double w = 0, lambda = 0;
    double total = 0;

    /// Recombination identity used by log validation.
    double recombine(const LossWeights& lw) const {
        return (sup_cls + sup_loc) + lw.lambda_total * (lw.lambda_cls * cc + lw.lambda_loc * lc);
    }
};

// ---------------------------------------------------------------------------
// Tape-level losses. All of these return scalar nodes.
// ---------------------------------------------------------------------------

template <typename T>
using Var = typename autograd::Graph<T>::Var;

/// Margin classification loss on class confidences.
template <typename T>
Var<T> margin_loss(autograd::Graph<T>& g, Var<T> scores, int label, T m_plus = T(0.9),
                   T m_minus = T(0.1), T down_weight = T(0.5)) {
    return autograd::ops::margin_loss(g, scores, label, m_plus, m_minus, down_weight);
}

/// Supervised localization loss: mean BCE plus dice.
template <typename T>
Var<T> bce_dice_loss(autograd::Graph<T>& g, Var<T> loc, const Tensor<T>& gt, T eps = T(1e-6)) {
    auto bce = autograd::ops::bce_mean(g, loc, gt);
    auto dice = autograd::ops::dice_loss(g, loc, gt, eps);
    return autograd::ops::add(g, bce, dice);
}

/// Classification consistency: JSD between softmax distributions of the two
/// views' penultimate features.
template <typename T>
Var<T> jsd_consistency(autograd::Graph<T>& g, Var<T> feat_a, Var<T> feat_b) {
    auto p = autograd::ops::softmax1d(g, feat_a);
    auto q = autograd::ops::softmax1d(g, feat_b);
    return autograd::ops::jsd(g, p, q);
}

/// Plain spatio-temporal consistency: mean squared difference over valid pixels.
template <typename T>
Var<T> l2_consistency(autograd::Graph<T>& g, Var<T> loc_a, Var<T> loc_b_inv,
                      const Tensor<std::uint8_t>& valid) {
    return autograd::ops::masked_sqdiff_mean(g, loc_a, loc_b_inv,
                                             static_cast<const Tensor<T>*>(nullptr), valid);
}

/// Temporal-coherence loss: w * (mask-weighted L2) + (1-w) * (plain L2).
template <typename T>
Var<T> coherence_loss(autograd::Graph<T>& g, Var<T> loc_a, Var<T> loc_b_inv,
                      const Tensor<std::uint8_t>& valid, const AttentionMask<T>& mask, T w) {
    if (w < T(0) || w > T(1)) throw std::invalid_argument("coherence_loss: w must be in [0,1]");
    auto masked = autograd::ops::masked_sqdiff_mean(g, loc_a, loc_b_inv, &mask.weights, valid);
    auto plain = autograd::ops::masked_sqdiff_mean(
        g, loc_a, loc_b_inv, static_cast<const Tensor<T>*>(nullptr), valid);
    return autograd::ops::weighted_sum<T>(g, {{w, masked}, {T(1) - w, plain}});
}

/// Gradient-smoothness loss: mask-weighted L2 only (no unweighted term).
template <typename T>
Var<T> gradient_smoothness_loss(autograd::Graph<T>& g, Var<T> loc_a, Var<T> loc_b_inv,
                                const Tensor<std::uint8_t>& valid,
                                const AttentionMask<T>& mask) {
    return autograd::ops::masked_sqdiff_mean(g, loc_a, loc_b_inv, &mask.weights, valid);
}

/// Overall objective, Eq. 9 shape:
///   L_total = (L_cls^l + L_loc^l) + lambda * (lambda1 * L_cc + lambda2 * L_lc).
/// Null vars mean the term is absent (contributes nothing, including to the
/// gradient). Mode gates which consistency terms participate.
template <typename T>
Var<T> total_loss(autograd::Graph<T>& g, Var<T> sup_cls, Var<T> sup_loc, Var<T> cls_const,
                  Var<T> loc_const, const LossWeights& lw, Mode mode) {
    if (lw.lambda_total < 0 || lw.lambda_cls < 0 || lw.lambda_loc < 0 || lw.w < 0)
        throw std::invalid_argument("total_loss: negative weights");
    std::vector<std::pair<T, Var<T>>> terms;
    if (sup_cls) terms.emplace_back(T(1), sup_cls);
    if (sup_loc) terms.emplace_back(T(1), sup_loc);
    if (mode != Mode::supervised) {
        const T lam = static_cast<T>(lw.lambda_total);
        if (cls_const && mode_uses_cc(mode))
            terms.emplace_back(lam * static_cast<T>(lw.lambda_cls), cls_const);
        if (loc_const && mode_uses_loc_consistency(mode))
            terms.emplace_back(lam * static_cast<T>(lw.lambda_loc), loc_const);
    }
    if (terms.empty()) return g.scalar(T(0));
    return autograd::ops::weighted_sum<T>(g, std::move(terms));
}

}  // namespace stssl::losses
