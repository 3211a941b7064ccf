#include "stssl/trainer/evaluate.hpp"

#include <cmath>

#include "stssl/core/threadpool.hpp"

namespace stssl::trainer {

std::vector<int> eval_window_starts(int video_len, int frames, int skip) {
    const int span = (frames - 1) * skip;
    if (video_len <= span)
        throw std::runtime_error("eval: video shorter than one clip window");
    std::vector<int> starts;
    for (int r = 0; r < skip; ++r)
        for (int s = r; s + span < video_len; s += frames * skip) starts.push_back(s);
    // Tail frames not reachable by the regular grid: add right-aligned windows.
    std::vector<bool> covered(static_cast<std::size_t>(video_len), false);
    for (int s : starts)
        for (int i = 0; i < frames; ++i) covered[static_cast<std::size_t>(s + i * skip)] = true;
    for (int t = video_len - 1; t >= 0; --t) {
        if (covered[static_cast<std::size_t>(t)]) continue;
        const int s = std::min(t, video_len - 1 - span);
        starts.push_back(s);
        for (int i = 0; i < frames; ++i) covered[static_cast<std::size_t>(s + i * skip)] = true;
    }
    return starts;
}

std::vector<VideoPrediction> predict_videos(const model::Network<float>& net,
                                            const model::ParamSet<float>& params,
                                            const dataio::Dataset& ds,
                                            const std::vector<std::string>& ids,
                                            const EvalParams& ep, ThreadPool* pool) {
    std::vector<VideoPrediction> preds(ids.size());
    const int K = net.config().capsule.num_capsules;

    if (!pool) pool = &ThreadPool::global();
    pool->parallel_for(static_cast<int>(ids.size()), [&](int vi) {
        const std::string& id = ids[static_cast<std::size_t>(vi)];
        const auto& vid = ds.video(id);
        VideoPrediction vp;
        vp.video_id = id;
        vp.loc = Tensor<float>({vid.T, ep.resolution, ep.resolution});
        vp.class_scores.assign(static_cast<std::size_t>(K), 0.0);
        Tensor<float> counts({vid.T});

        const auto starts = eval_window_starts(vid.T, ep.frames, ep.skip);
        for (int s : starts) {
            const auto clip =
                dataio::extract_clip(ds, id, s, ep.frames, ep.skip, ep.resolution, ep.resolution);
            autograd::Graph<float> g;
            std::vector<autograd::Graph<float>::Var> pv;
            pv.reserve(params.values.size());
            for (const auto& t : params.values) pv.push_back(g.leaf(t, false));
            auto fwd = net.forward(g, pv, g.constant(model::clip_to_chw<float>(clip)));
            for (int i = 0; i < ep.frames; ++i) {
                const int t = clip.frame_indices[static_cast<std::size_t>(i)];
                counts[static_cast<std::size_t>(t)] += 1.0f;
                for (int y = 0; y < ep.resolution; ++y)
                    for (int x = 0; x < ep.resolution; ++x)
                        vp.loc.at3(t, y, x) += fwd.loc->value.at3(i, y, x);
            }
            for (int k = 0; k < K; ++k)
                vp.class_scores[static_cast<std::size_t>(k)] +=
                    static_cast<double>(fwd.class_scores->value[static_cast<std::size_t>(k)]);
        }
        for (int t = 0; t < vid.T; ++t) {
            const float c = counts[static_cast<std::size_t>(t)];
            if (c > 1.0f)
                for (int y = 0; y < ep.resolution; ++y)
                    for (int x = 0; x < ep.resolution; ++x) vp.loc.at3(t, y, x) /= c;
        }
        for (auto& s : vp.class_scores) s /= static_cast<double>(starts.size());
        preds[static_cast<std::size_t>(vi)] = std::move(vp);
    });
    return preds;
}

evalkit::MetricsReport evaluate_model(const model::Network<float>& net,
                                      const model::ParamSet<float>& params,
                                      const dataio::Dataset& ds,
                                      const std::vector<std::string>& ids,
                                      const EvalParams& ep, ThreadPool* pool) {
    const auto preds = predict_videos(net, params, ds, ids, ep, pool);

    std::vector<evalkit::Detection> dets;
    std::vector<evalkit::Tube> tubes;
    for (const auto& vp : preds) {
        const auto& vid = ds.video(vp.video_id);
        std::vector<int> all_frames(static_cast<std::size_t>(vid.T));
        for (int t = 0; t < vid.T; ++t) all_frames[static_cast<std::size_t>(t)] = t;
        auto fd = evalkit::map_to_detections(vp.loc, all_frames, vp.class_scores, vp.video_id,
                                             ds.ann.mode, ep.threshold);
        // Detections live on the model grid; rescale boxes to the video grid
        // when the resolutions differ.
        const double fy = static_cast<double>(vid.H) / ep.resolution;
        const double fx = static_cast<double>(vid.W) / ep.resolution;
        auto rescale = [&](evalkit::Region& r) {
            if (fx == 1.0 && fy == 1.0) return;
            if (r.kind != evalkit::Region::Kind::box)
                throw std::runtime_error("eval: mask-mode evaluation requires matching resolution");
            r.box.x1 = static_cast<int>(std::lround(r.box.x1 * fx));
            r.box.x2 = static_cast<int>(std::lround(r.box.x2 * fx));
            r.box.y1 = static_cast<int>(std::lround(r.box.y1 * fy));
            r.box.y2 = static_cast<int>(std::lround(r.box.y2 * fy));
        };
        for (auto& d : fd.detections) {
            rescale(d.region);
            dets.push_back(std::move(d));
        }
        if (fd.tube) {
            for (auto& r : fd.tube->regions) rescale(r);
            tubes.push_back(std::move(*fd.tube));
        }
    }

    std::vector<evalkit::GroundTruthFrame> gt_frames;
    std::vector<evalkit::Tube> gt_tubes;
    evalkit::dataset_ground_truth(ds, ids, gt_frames, gt_tubes);
    return evalkit::evaluate_detections(dets, tubes, gt_frames, gt_tubes, ds.class_count(),
                                        ep.iou_thresholds);
}

}  // namespace stssl::trainer
