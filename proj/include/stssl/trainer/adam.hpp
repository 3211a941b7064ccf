#pragma once

#include <cmath>
#include <vector>

#include "stssl/model/network.hpp"

namespace stssl::trainer {

/// Adam with bias-corrected moments. Moment math runs in double regardless of
/// the parameter precision.
template <typename T>
struct Adam {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long long t = 0;
    std::vector<Tensor<double>> m, v;

    void init(const model::ParamSet<T>& params) {
        m.clear();
        v.clear();
        for (const auto& p : params.values) {
            m.emplace_back(p.shape());
            v.emplace_back(p.shape());
        }
        t = 0;
    }

    void step(model::ParamSet<T>& params, const std::vector<Tensor<T>>& grads, double lr) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.values.size(); ++i) {
            Tensor<T>& p = params.values[i];
            const Tensor<T>& g = grads[i];
            Tensor<double>& mi = m[i];
            Tensor<double>& vi = v[i];
            for (std::size_t k = 0; k < p.size(); ++k) {
                const double gk = static_cast<double>(g[k]);
                mi[k] = beta1 * mi[k] + (1.0 - beta1) * gk;
                vi[k] = beta2 * vi[k] + (1.0 - beta2) * gk * gk;
                const double mhat = mi[k] / bc1;
                const double vhat = vi[k] / bc2;
                p[k] = static_cast<T>(static_cast<double>(p[k]) -
                                      lr * mhat / (std::sqrt(vhat) + eps));
            }
        }
    }
};

}  // namespace stssl::trainer
