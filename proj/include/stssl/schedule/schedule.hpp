#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace stssl::schedule {

/// Exponential ramp for the coherence blend weight w.
struct RampSchedule {
    int ramp_length = 1;   // epochs
    double w_max = 1.0;
};

/// w(t) = w_max * exp(-5 (1 - min(t,L)/L)^2); saturates at w_max for t >= L.
inline double rampup_w(int t, const RampSchedule& s) {
    if (t < 0) throw std::invalid_argument("rampup_w: t must be >= 0");
    const int L = std::max(1, s.ramp_length);
    if (t >= L) return s.w_max;
    const double x = 1.0 - static_cast<double>(t) / static_cast<double>(L);
    return s.w_max * std::exp(-5.0 * x * x);
}

/// Learning-rate decay on training-loss plateaus.
struct PlateauPolicy {
    double decay_factor = 0.1;
    int patience = 5;       // epochs
    double tolerance = 1e-8;
};

/// Incremental plateau tracker: an epoch that fails to improve the best seen
/// loss beyond the tolerance counts against the patience; hitting the
/// patience decays the lr and resets the window.
struct PlateauController {
    double lr = 1e-4;
    double best = std::numeric_limits<double>::infinity();
    int bad_epochs = 0;

    double observe(double epoch_loss, const PlateauPolicy& policy) {
        if (epoch_loss < best - policy.tolerance) {
            best = epoch_loss;
            bad_epochs = 0;
        } else if (++bad_epochs >= policy.patience) {
            lr *= policy.decay_factor;
            bad_epochs = 0;
        }
        return lr;
    }

    nlohmann::json state() const {
        return {{"lr", lr}, {"best", best}, {"bad_epochs", bad_epochs}};
    }
    void restore(const nlohmann::json& j) {
        lr = j.at("lr").get<double>();
        best = j.at("best").get<double>();
        bad_epochs = j.at("bad_epochs").get<int>();
    }
};

/// Replays a per-epoch loss history from `initial_lr` and returns the final
/// learning rate under the policy.
inline double plateau_step(const std::vector<double>& history, double initial_lr,
                           const PlateauPolicy& policy) {
    if (history.empty()) throw std::invalid_argument("plateau_step: empty history");
    PlateauController c;
    c.lr = initial_lr;
    for (double loss : history) c.observe(loss, policy);
    return c.lr;
}

}  // namespace stssl::schedule
