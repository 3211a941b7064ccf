#pragma once

#include <filesystem>

#include "stssl/core/rng.hpp"
#include "stssl/dataio/sampler.hpp"
#include "stssl/model/network.hpp"
#include "stssl/schedule/schedule.hpp"
#include "stssl/trainer/adam.hpp"
#include "stssl/trainer/config.hpp"

namespace stssl::trainer {

inline constexpr const char* kCodeVersion = "stssl 0.1.0";

/// Everything needed to continue training bit-compatibly from an epoch
/// boundary.
struct TrainState {
    model::ParamSet<float> params;
    Adam<float> adam;
    dataio::MixedBatchSampler sampler{Rng(0)};
    Rng aug_rng{0};
    schedule::PlateauController plateau;
    int next_epoch = 0;
    long long global_step = 0;
    double best_metric = -1.0;
    std::vector<double> epoch_losses;
};

/// Checkpoint directory layout: params.bin, optim.bin, manifest.json.
void save_checkpoint(const std::filesystem::path& dir, const TrainState& state,
                     const TrainConfig& cfg);

/// Loads and verifies a checkpoint. A config-hash mismatch is refused unless
/// cfg.force_resume; a model-architecture mismatch names the offending field.
TrainState load_checkpoint(const std::filesystem::path& dir, const TrainConfig& cfg,
                           const model::Network<float>& net);

// Raw tensor-blob IO (exposed for tests).
void write_tensor_blob(const std::filesystem::path& path,
                       const std::vector<std::string>& names,
                       const std::vector<const Tensor<float>*>& f32,
                       const std::vector<const Tensor<double>*>& f64);
void read_tensor_blob(const std::filesystem::path& path, std::vector<std::string>& names,
                      std::vector<Tensor<float>>& f32, std::vector<Tensor<double>>& f64,
                      std::vector<int>& kinds);

}  // namespace stssl::trainer
