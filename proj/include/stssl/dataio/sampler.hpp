#pragma once

#include <json.hpp>

#include "stssl/core/rng.hpp"
#include "stssl/dataio/dataset.hpp"

namespace stssl::dataio {

struct SamplerConfig {
    int batch_size = 8;
    int frames = 8;
    int skip = 2;
    int out_h = 64;
    int out_w = 64;
    bool supervised = false;  // supervised mode draws the whole batch labeled
};

/// Mixed labeled/unlabeled batch sampler. Cycles both subsets independently
/// with per-epoch reshuffling; clip starts are drawn uniformly over valid
/// positions. Owns all shuffle state; confine to one logical owner.
class MixedBatchSampler {
public:
    explicit MixedBatchSampler(Rng rng) : rng_(rng) {}

    MixedBatch next(const Dataset& ds, const SplitIndex& index, const SamplerConfig& cfg);

    nlohmann::json state() const;
    void restore(const nlohmann::json& j);

private:
    std::string draw(const std::vector<std::string>& pool, std::vector<int>& perm,
                     std::size_t& pos);

    Rng rng_;
    std::vector<int> perm_lab_, perm_unl_;
    std::size_t pos_lab_ = 0, pos_unl_ = 0;
};

}  // namespace stssl::dataio
