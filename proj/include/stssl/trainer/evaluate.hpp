#pragma once

#include "stssl/core/threadpool.hpp"
#include "stssl/dataio/dataset.hpp"
#include "stssl/evalkit/evalkit.hpp"
#include "stssl/model/network.hpp"

namespace stssl::trainer {

struct EvalParams {
    int frames = 8;
    int skip = 2;
    int resolution = 64;
    double threshold = 0.5;
    std::vector<double> iou_thresholds = {0.2, 0.5};
};

/// Clip start positions that cover every frame of a video at the given
/// (frames, skip) window geometry.
std::vector<int> eval_window_starts(int video_len, int frames, int skip);

struct VideoPrediction {
    std::string video_id;
    Tensor<float> loc;                // [T_video, H, W], overlaps averaged
    std::vector<double> class_scores; // averaged over windows
};

/// Runs the model over whole videos (forward only, deterministic).
std::vector<VideoPrediction> predict_videos(const model::Network<float>& net,
                                            const model::ParamSet<float>& params,
                                            const dataio::Dataset& ds,
                                            const std::vector<std::string>& ids,
                                            const EvalParams& ep, ThreadPool* pool = nullptr);

/// Full detection evaluation of a model over the given video ids.
evalkit::MetricsReport evaluate_model(const model::Network<float>& net,
                                      const model::ParamSet<float>& params,
                                      const dataio::Dataset& ds,
                                      const std::vector<std::string>& ids,
                                      const EvalParams& ep, ThreadPool* pool = nullptr);

}  // namespace stssl::trainer
