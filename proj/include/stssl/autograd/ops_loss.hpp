#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "stssl/autograd/graph.hpp"

namespace stssl::autograd::ops {

namespace detail {
template <typename T>
constexpr T log_clamp() {
    return std::is_same_v<T, float> ? T(1e-7) : T(1e-12);
}
}  // namespace detail

/// Margin loss over class scores:
/// sum_k T_k max(0, m+ - s_k)^2 + down * (1-T_k) max(0, s_k - m-)^2.
template <typename T>
typename Graph<T>::Var margin_loss(Graph<T>& g, typename Graph<T>::Var scores, int label,
                                   T m_plus = T(0.9), T m_minus = T(0.1), T down = T(0.5)) {
    const int K = static_cast<int>(scores->value.size());
    if (label < 0 || label >= K) throw std::out_of_range("margin_loss: label out of range");
    Tensor<T> y({1});
    T loss = T(0);
    for (int k = 0; k < K; ++k) {
        const T s = scores->value[k];
        if (k == label) {
            const T d = std::max(T(0), m_plus - s);
            loss += d * d;
        } else {
            const T d = std::max(T(0), s - m_minus);
            loss += down * d * d;
        }
    }
    y[0] = loss;
    return g.make(std::move(y), {scores}, [scores, label, K, m_plus, m_minus, down](Node<T>& n) {
        T* ds = grad_of(scores);
        if (!ds) return;
        const T go = n.grad[0];
        for (int k = 0; k < K; ++k) {
            const T s = scores->value[k];
            if (k == label) {
                const T d = std::max(T(0), m_plus - s);
                ds[k] += go * T(-2) * d;
            } else {
                const T d = std::max(T(0), s - m_minus);
                ds[k] += go * down * T(2) * d;
            }
        }
    });
}

/// Mean binary cross-entropy between a probability map and a binary target.
template <typename T>
typename Graph<T>::Var bce_mean(Graph<T>& g, typename Graph<T>::Var p, Tensor<T> gt) {
    if (!p->value.same_shape(gt)) throw std::invalid_argument("bce_mean: shape mismatch");
    const std::size_t n = p->value.size();
    const T lo = detail::log_clamp<T>();
    const T hi = T(1) - lo;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const T pc = std::min(hi, std::max(lo, p->value[i]));
        const double gv = static_cast<double>(gt[i]);
        acc -= gv * std::log(static_cast<double>(pc)) +
               (1.0 - gv) * std::log(1.0 - static_cast<double>(pc));
    }
    Tensor<T> y({1});
    y[0] = static_cast<T>(acc / static_cast<double>(n));
    return g.make(std::move(y), {p}, [p, gt = std::move(gt), n, lo, hi](Node<T>& nd) {
        T* dp = grad_of(p);
        if (!dp) return;
        const T go = nd.grad[0] / static_cast<T>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const T pv = p->value[i];
            if (pv <= lo || pv >= hi) continue;
            dp[i] += go * ((T(1) - gt[i]) / (T(1) - pv) - gt[i] / pv);
        }
    });
}

/// Dice loss: 1 - (2*sum(p*g)+eps) / (sum(p)+sum(g)+eps).
template <typename T>
typename Graph<T>::Var dice_loss(Graph<T>& g, typename Graph<T>::Var p, Tensor<T> gt,
                                 T eps = T(1e-6)) {
    if (!p->value.same_shape(gt)) throw std::invalid_argument("dice_loss: shape mismatch");
    const std::size_t n = p->value.size();
    double inter = 0.0, psum = 0.0, gsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        inter += static_cast<double>(p->value[i]) * static_cast<double>(gt[i]);
        psum += static_cast<double>(p->value[i]);
        gsum += static_cast<double>(gt[i]);
    }
    const double A = 2.0 * inter + static_cast<double>(eps);
    const double B = psum + gsum + static_cast<double>(eps);
    Tensor<T> y({1});
    y[0] = static_cast<T>(1.0 - A / B);
    return g.make(std::move(y), {p}, [p, gt = std::move(gt), n, A, B](Node<T>& nd) {
        T* dp = grad_of(p);
        if (!dp) return;
        const double go = static_cast<double>(nd.grad[0]);
        const double b2 = B * B;
        for (std::size_t i = 0; i < n; ++i)
            dp[i] += static_cast<T>(go * (A - 2.0 * static_cast<double>(gt[i]) * B) / b2);
    });
}

/// Jensen-Shannon divergence between two probability vectors (natural log).
template <typename T>
typename Graph<T>::Var jsd(Graph<T>& g, typename Graph<T>::Var p, typename Graph<T>::Var q) {
    if (!p->value.same_shape(q->value)) throw std::invalid_argument("jsd: shape mismatch");
    const std::size_t n = p->value.size();
    const T tiny = detail::log_clamp<T>();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pv = std::max<double>(p->value[i], 0.0);
        const double qv = std::max<double>(q->value[i], 0.0);
        if (!std::isfinite(pv) || !std::isfinite(qv))
            throw std::domain_error("jsd: non-finite input");
        const double m = 0.5 * (pv + qv);
        if (pv > 0) acc += 0.5 * pv * std::log(pv / m);
        if (qv > 0) acc += 0.5 * qv * std::log(qv / m);
    }
    Tensor<T> y({1});
    y[0] = static_cast<T>(std::max(0.0, acc));
    return g.make(std::move(y), {p, q}, [p, q, n, tiny](Node<T>& nd) {
        const T go = nd.grad[0];
        T* dp = grad_of(p);
        T* dq = grad_of(q);
        for (std::size_t i = 0; i < n; ++i) {
            const double pv = std::max<double>(p->value[i], static_cast<double>(tiny));
            const double qv = std::max<double>(q->value[i], static_cast<double>(tiny));
            const double m = 0.5 * (pv + qv);
            if (dp) dp[i] += go * static_cast<T>(0.5 * std::log(pv / m));
            if (dq) dq[i] += go * static_cast<T>(0.5 * std::log(qv / m));
        }
    });
}

/// Mean over valid pixels of weight * (a-b)^2. `weight` may be null (all ones);
/// both weight and validity are constants as far as gradients are concerned.
template <typename T>
typename Graph<T>::Var masked_sqdiff_mean(Graph<T>& g, typename Graph<T>::Var a,
                                          typename Graph<T>::Var b, const Tensor<T>* weight,
                                          Tensor<std::uint8_t> valid) {
    if (!a->value.same_shape(b->value)) throw std::invalid_argument("sqdiff: shape mismatch");
    if (a->value.size() != valid.size()) throw std::invalid_argument("sqdiff: validity mismatch");
    if (weight && !a->value.same_shape(*weight))
        throw std::invalid_argument("sqdiff: weight mismatch");
    const std::size_t n = a->value.size();
    std::size_t count = 0;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!valid[i]) continue;
        ++count;
        const double d = static_cast<double>(a->value[i]) - static_cast<double>(b->value[i]);
        acc += (weight ? static_cast<double>((*weight)[i]) : 1.0) * d * d;
    }
    if (count == 0) throw std::domain_error("sqdiff: zero valid pixels");
    Tensor<T> y({1});
    y[0] = static_cast<T>(acc / static_cast<double>(count));
    Tensor<T> wcopy = weight ? *weight : Tensor<T>();
    const bool has_w = weight != nullptr;
    return g.make(std::move(y), {a, b},
                  [a, b, wcopy = std::move(wcopy), has_w, valid = std::move(valid), n,
                   count](Node<T>& nd) {
                      T* da = grad_of(a);
                      T* db = grad_of(b);
                      const T go = nd.grad[0] * T(2) / static_cast<T>(count);
                      for (std::size_t i = 0; i < n; ++i) {
                          if (!valid[i]) continue;
                          const T d = a->value[i] - b->value[i];
                          const T w = has_w ? wcopy[i] : T(1);
                          if (da) da[i] += go * w * d;
                          if (db) db[i] -= go * w * d;
                      }
                  });
}

}  // namespace stssl::autograd::ops
