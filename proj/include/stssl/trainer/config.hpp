#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "stssl/augment/augment.hpp"
#include "stssl/losses/losses.hpp"
#include "stssl/model/config.hpp"
#include "stssl/schedule/schedule.hpp"

namespace stssl::trainer {

/// Full training-run configuration. Defaults follow the trained-from-scratch
/// desk setup; the loss and optimizer constants keep their standard values
/// (lambda 0.1, lambda1 0.3, lambda2 0.7, lr 1e-4, batch 8, 8 frames skip 2,
/// coherence window of 2 past and 2 future frames).
struct TrainConfig {
    losses::Mode mode = losses::Mode::semi_var;
    int epochs = 20;
    int batch_size = 8;
    int frames = 8;
    int skip = 2;
    int resolution = 64;
    double lr = 1e-4;
    double lambda = 0.1;
    double lambda1 = 0.3;
    double lambda2 = 0.7;
    int coherence_window = 2;        // past and future frames for the variance mask
    int ramp_length = -1;            // epochs; -1 resolves to epochs/2
    double w_max = 1.0;
    schedule::PlateauPolicy plateau;
    double labeled_fraction = 0.2;
    std::uint64_t seed = 0;
    model::ModelConfig model;
    augment::Strength strength = augment::Strength::strong;
    losses::Mode both_variant = losses::Mode::semi_lc;  // loc variant inside semi-both
    int unlabeled_limit = -1;        // cap on unlabeled pool size; -1 = all
    double det_threshold = 0.5;
    bool force_resume = false;

    schedule::RampSchedule ramp() const {
        schedule::RampSchedule r;
        r.ramp_length = ramp_length > 0 ? ramp_length : std::max(1, epochs / 2);
        r.w_max = w_max;
        return r;
    }

    losses::LossWeights weights(double w) const {
        losses::LossWeights lw;
        lw.lambda_total = lambda;
        lw.lambda_cls = lambda1;
        lw.lambda_loc = lambda2;
        lw.w = w;
        return lw;
    }

    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);

    /// Applies a `key=value` override onto the flat-key JSON form.
    static void apply_override(nlohmann::json& flat, const std::string& key,
                               const std::string& value);

    std::uint64_t config_hash() const;
    void validate() const;
};

}  // namespace stssl::trainer
