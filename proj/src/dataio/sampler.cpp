#include "stssl/dataio/sampler.hpp"

#include <stdexcept>

namespace stssl::dataio {

using nlohmann::json;

std::string MixedBatchSampler::draw(const std::vector<std::string>& pool, std::vector<int>& perm,
                                    std::size_t& pos) {
    if (perm.size() != pool.size()) {
        perm.resize(pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i) perm[i] = static_cast<int>(i);
        pos = perm.size();  // force reshuffle below
    }
    if (pos >= perm.size()) {
        rng_.shuffle(perm.begin(), perm.end());
        pos = 0;
    }
    return pool[static_cast<std::size_t>(perm[pos++])];
}

MixedBatch MixedBatchSampler::next(const Dataset& ds, const SplitIndex& index,
                                   const SamplerConfig& cfg) {
    if (cfg.batch_size <= 0 || cfg.batch_size % 2 != 0)
        throw std::invalid_argument("sampler: batch_size must be even and positive");
    if (index.labeled_ids.empty()) throw std::runtime_error("sampler: empty labeled set");
    if (!cfg.supervised && index.unlabeled_ids.empty())
        throw std::runtime_error(
            "sampler: empty unlabeled set in semi-supervised mode; use supervised mode");

    const int n_lab = cfg.supervised ? cfg.batch_size : cfg.batch_size / 2;
    const int n_unl = cfg.supervised ? 0 : cfg.batch_size / 2;

    MixedBatch batch;
    batch.items.reserve(static_cast<std::size_t>(cfg.batch_size));

    auto make_item = [&](const std::string& id, bool labeled) {
        const VideoU8& vid = ds.video(id);
        const int starts = valid_clip_starts(vid.T, cfg.frames, cfg.skip);
        if (starts <= 0)
            throw std::runtime_error("sampler: video " + id + " too short for clip extraction");
        const int start = rng_.uniform_int(starts);
        BatchItem item;
        item.clip = extract_clip(ds, id, start, cfg.frames, cfg.skip, cfg.out_h, cfg.out_w);
        item.labeled = labeled;
        if (labeled) {
            item.class_id = ds.annotation(id).class_id;
            item.gt = clip_ground_truth(ds, id, item.clip.frame_indices, cfg.out_h, cfg.out_w);
        }
        return item;
    };

    for (int i = 0; i < n_lab; ++i)
        batch.items.push_back(make_item(draw(index.labeled_ids, perm_lab_, pos_lab_), true));
    for (int i = 0; i < n_unl; ++i)
        batch.items.push_back(make_item(draw(index.unlabeled_ids, perm_unl_, pos_unl_), false));
    rng_.shuffle(batch.items.begin(), batch.items.end());
    return batch;
}

json MixedBatchSampler::state() const {
    json j;
    j["rng"] = rng_.state_hex();
    j["perm_lab"] = perm_lab_;
    j["perm_unl"] = perm_unl_;
    j["pos_lab"] = pos_lab_;
    j["pos_unl"] = pos_unl_;
    return j;
}

void MixedBatchSampler::restore(const json& j) {
    Rng r;
    r.set_state_hex(j.at("rng").get<std::string>());
    rng_ = r;
    perm_lab_ = j.at("perm_lab").get<std::vector<int>>();
    perm_unl_ = j.at("perm_unl").get<std::vector<int>>();
    pos_lab_ = j.at("pos_lab").get<std::size_t>();
    pos_unl_ = j.at("pos_unl").get<std::size_t>();
}

}  // namespace stssl::dataio
