#pragma once

#include <filesystem>

#include "stssl/trainer/checkpoint.hpp"
#include "stssl/trainer/evaluate.hpp"
#include "stssl/trainer/pipeline.hpp"

namespace stssl::trainer {

struct RunResult {
    double best_f_map05 = 0.0;
    long long steps = 0;
    std::filesystem::path best_checkpoint;
    std::filesystem::path last_checkpoint;
};

/// End-to-end training loop: two-view forwards, mode-gated loss assembly,
/// Adam updates, per-epoch validation, best/last checkpoints, JSONL logs.
/// Deterministic for a fixed config and seed regardless of thread count
/// (all randomness is drawn on the control thread, gradient reduction is
/// ordered).
class Trainer {
public:
    Trainer(TrainConfig cfg, const dataio::Dataset& ds, dataio::SplitIndex split,
            std::filesystem::path run_dir, ThreadPool* pool = nullptr);

    RunResult fit(bool resume = false);

    /// One optimizer step on an explicit batch (exposed for tests).
    losses::LossBreakdown step_batch(const dataio::MixedBatch& batch, double w, double lr,
                                     TrainState& state) const;

    int steps_per_epoch() const;
    const model::Network<float>& network() const { return net_; }

private:
    void log_train_line(const losses::LossBreakdown& parts, long long step);
    void log_eval_line(int epoch, const evalkit::MetricsReport& report, double lr, double w,
                       double train_loss);

    TrainConfig cfg_;
    const dataio::Dataset& ds_;
    dataio::SplitIndex split_;
    std::filesystem::path run_dir_;
    ThreadPool* pool_;
    model::Network<float> net_;
};

}  // namespace stssl::trainer
