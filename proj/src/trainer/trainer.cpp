#include "stssl/trainer/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "stssl/core/io.hpp"
#include "stssl/core/threadpool.hpp"

namespace stssl::trainer {

using nlohmann::json;

Trainer::Trainer(TrainConfig cfg, const dataio::Dataset& ds, dataio::SplitIndex split,
                 std::filesystem::path run_dir, ThreadPool* pool)
    : cfg_(std::move(cfg)), ds_(ds), split_(std::move(split)), run_dir_(std::move(run_dir)),
      pool_(pool ? pool : &ThreadPool::global()), net_([&] {
          cfg_.model.out_t = cfg_.frames;
          cfg_.model.out_h = cfg_.resolution;
          cfg_.model.out_w = cfg_.resolution;
          cfg_.model.capsule.num_capsules = ds.class_count();
          cfg_.validate();
          return model::Network<float>(cfg_.model);
      }()) {
    std::filesystem::create_directories(run_dir_);
}

int Trainer::steps_per_epoch() const {
    const int n_lab = static_cast<int>(split_.labeled_ids.size());
    const int per_step =
        cfg_.mode == losses::Mode::supervised ? cfg_.batch_size : cfg_.batch_size / 2;
    return std::max(1, (n_lab + per_step - 1) / per_step);
}

losses::LossBreakdown Trainer::step_batch(const dataio::MixedBatch& batch, double w, double lr,
                                          TrainState& state) const {
    const int B = static_cast<int>(batch.items.size());
    const int n_lab = batch.labeled_count();
    const bool supervised = cfg_.mode == losses::Mode::supervised;
    const losses::LossWeights lw = cfg_.weights(w);

    // All randomness on the control thread, before any parallel work.
    std::vector<augment::AugRecord> records(static_cast<std::size_t>(B));
    if (!supervised)
        for (auto& r : records) r = augment::sample_augmentation(cfg_.strength, state.aug_rng);

    const std::size_t P = state.params.values.size();
    std::vector<std::vector<Tensor<float>>> grads(static_cast<std::size_t>(B));
    std::vector<losses::LossBreakdown> parts(static_cast<std::size_t>(B));
    std::vector<std::string> errors(static_cast<std::size_t>(B));

    pool_->parallel_for(B, [&](int i) {
        try {
            autograd::Graph<float> g;
            std::vector<autograd::Graph<float>::Var> pv;
            pv.reserve(P);
            for (const auto& t : state.params.values) pv.push_back(g.leaf(t, true));
            auto r = build_item_loss<float>(
                g, net_, pv, batch.items[static_cast<std::size_t>(i)],
                supervised ? nullptr : &records[static_cast<std::size_t>(i)], cfg_.mode, lw,
                cfg_.coherence_window, cfg_.both_variant, n_lab > 0 ? 1.0 / n_lab : 0.0,
                1.0 / B);
            g.backward(r.objective);
            auto& gi = grads[static_cast<std::size_t>(i)];
            gi.reserve(P);
            for (auto* leaf : pv) gi.push_back(std::move(leaf->grad));
            parts[static_cast<std::size_t>(i)] = r.parts;
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = e.what();
        }
    });
    for (const auto& e : errors)
        if (!e.empty()) throw std::runtime_error("train_step failed: " + e);

    // Ordered reductions keep results independent of scheduling.
    losses::LossBreakdown total;
    total.w = w;
    total.lambda = cfg_.lambda;
    for (int i = 0; i < B; ++i) {
        const auto& p = parts[static_cast<std::size_t>(i)];
        if (n_lab > 0) {
            total.sup_cls += p.sup_cls / n_lab;
            total.sup_loc += p.sup_loc / n_lab;
        }
        total.cc += p.cc / B;
        total.lc += p.lc / B;
    }
    total.total = total.recombine(lw);
    if (!std::isfinite(total.total)) {
        std::ostringstream os;
        os << "non-finite loss at step " << state.global_step << ": sup_cls=" << total.sup_cls
           << " sup_loc=" << total.sup_loc << " cc=" << total.cc << " lc=" << total.lc;
        throw std::runtime_error(os.str());
    }

    std::vector<Tensor<float>> acc;
    acc.reserve(P);
    for (const auto& t : state.params.values) acc.emplace_back(t.shape());
    for (int i = 0; i < B; ++i)
        for (std::size_t p = 0; p < P; ++p)
            kernels::add_into(acc[p].size(), grads[static_cast<std::size_t>(i)][p].data(),
                              acc[p].data());

    state.adam.step(state.params, acc, lr);
    return total;
}

void Trainer::log_train_line(const losses::LossBreakdown& parts, long long step) {
    json j;
    j["step"] = step;
    j["L_sup_cls"] = parts.sup_cls;
    j["L_sup_loc"] = parts.sup_loc;
    j["L_cc"] = parts.cc;
    j["L_lc"] = parts.lc;
    j["w"] = parts.w;
    j["lambda"] = parts.lambda;
    j["total"] = parts.total;
    std::ofstream f(run_dir_ / "train_log.jsonl", std::ios::app);
    f << j.dump() << "\n";
}

void Trainer::log_eval_line(int epoch, const evalkit::MetricsReport& report, double lr, double w,
                            double train_loss) {
    json j;
    j["epoch"] = epoch;
    for (const auto& [key, tr] : report.at) {
        j["f_map_" + key.substr(4)] = tr.f_map;
        j["v_map_" + key.substr(4)] = tr.v_map;
    }
    j["lr"] = lr;
    j["w"] = w;
    j["train_loss"] = train_loss;
    std::ofstream f(run_dir_ / "eval_log.jsonl", std::ios::app);
    f << j.dump() << "\n";
}

RunResult Trainer::fit(bool resume) {
    const auto last_dir = run_dir_ / "last";
    const auto best_dir = run_dir_ / "best";

    TrainState state;
    if (resume) {
        state = load_checkpoint(last_dir, cfg_, net_);
    } else {
        write_json_file(run_dir_ / "config.json", cfg_.to_json());
        write_split_manifest(run_dir_ / "split.json", split_, cfg_.labeled_fraction, cfg_.seed);
        state.params = net_.init_params(cfg_.seed);
        state.adam.init(state.params);
        state.sampler = dataio::MixedBatchSampler(Rng(cfg_.seed).split("sampler"));
        state.aug_rng = Rng(cfg_.seed).split("augment");
        state.plateau.lr = cfg_.lr;
    }

    dataio::SamplerConfig scfg;
    scfg.batch_size = cfg_.batch_size;
    scfg.frames = cfg_.frames;
    scfg.skip = cfg_.skip;
    scfg.out_h = cfg_.resolution;
    scfg.out_w = cfg_.resolution;
    scfg.supervised = cfg_.mode == losses::Mode::supervised;

    EvalParams ep;
    ep.frames = cfg_.frames;
    ep.skip = cfg_.skip;
    ep.resolution = cfg_.resolution;
    ep.threshold = cfg_.det_threshold;

    const auto ramp = cfg_.ramp();
    const int spe = steps_per_epoch();

    RunResult result;
    result.best_f_map05 = state.best_metric;

    if (state.next_epoch == 0) save_checkpoint(last_dir, state, cfg_);

    for (int epoch = state.next_epoch; epoch < cfg_.epochs; ++epoch) {
        const double w = schedule::rampup_w(epoch, ramp);
        const double lr = state.plateau.lr;
        double loss_sum = 0;
        for (int s = 0; s < spe; ++s) {
            auto batch = state.sampler.next(ds_, split_, scfg);
            const auto parts = step_batch(batch, w, lr, state);
            ++state.global_step;
            log_train_line(parts, state.global_step);
            loss_sum += parts.total;
        }
        const double epoch_loss = loss_sum / spe;
        state.epoch_losses.push_back(epoch_loss);
        state.plateau.observe(epoch_loss, cfg_.plateau);

        double fmap05 = 0;
        if (!ds_.val_ids.empty()) {
            const auto report = evaluate_model(net_, state.params, ds_, ds_.val_ids, ep, pool_);
            auto it = report.at.find("iou_0.5");
            fmap05 = it != report.at.end() ? it->second.f_map : 0.0;
            log_eval_line(epoch, report, lr, w, epoch_loss);
        }

        state.next_epoch = epoch + 1;
        const bool improved = fmap05 > state.best_metric;
        if (improved) state.best_metric = fmap05;
        save_checkpoint(last_dir, state, cfg_);
        if (improved) save_checkpoint(best_dir, state, cfg_);
        result.best_f_map05 = state.best_metric;
        result.steps = state.global_step;
    }

    if (!std::filesystem::exists(best_dir)) save_checkpoint(best_dir, state, cfg_);
    result.best_checkpoint = best_dir;
    result.last_checkpoint = last_dir;
    return result;
}

}  // namespace stssl::trainer
