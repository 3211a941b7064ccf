#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stssl/core/tensor.hpp"
#include "stssl/dataio/types.hpp"

namespace stssl::evalkit {

/// Spatial region of a detection: an axis-aligned box or a binary mask.
struct Region {
    enum class Kind { box, mask } kind = Kind::box;
    dataio::FrameBox box;          // box kind (and cached bounds for mask kind)
    int mask_h = 0, mask_w = 0;    // mask kind
    std::vector<std::uint8_t> mask;

    long long area() const;
    bool empty() const { return area() == 0; }

    static Region from_box(const dataio::FrameBox& b) {
        Region r;
        r.kind = Kind::box;
        r.box = b;
        return r;
    }
    static Region from_mask(int h, int w, std::vector<std::uint8_t> bits);
};

/// |A n B| / |A u B|; 0 when both regions are empty. Mixed kinds throw.
double iou(const Region& a, const Region& b);

struct Detection {
    std::string video_id;
    int frame_index = 0;
    int class_id = 0;
    double score = 0;
    Region region;
};

/// Scored per-frame regions over one contiguous frame span.
struct Tube {
    std::string video_id;
    int class_id = 0;
    double score = 0;
    int start_frame = 0;  // video frame index of regions[0]
    int frame_step = 1;
    std::vector<Region> regions;

    int span() const { return static_cast<int>(regions.size()); }
    int end_frame() const { return start_frame + (span() - 1) * frame_step; }
};

/// Temporal-IoU times mean spatial IoU over the temporal intersection.
double tube_iou(const Tube& a, const Tube& b);

struct FrameDetections {
    std::vector<Detection> detections;
    std::optional<Tube> tube;
};

/// Converts a localization map into per-frame detections plus one tube:
/// binarize at `threshold`, keep the largest 8-connected component per frame,
/// detection score = max class confidence, class = argmax. The tube covers
/// the longest contiguous run of frames with non-empty components.
FrameDetections map_to_detections(const Tensor<float>& loc, const std::vector<int>& frame_indices,
                                  const std::vector<double>& class_scores,
                                  const std::string& video_id, dataio::AnnotationMode mode,
                                  double threshold = 0.5);

/// One scored prediction with its overlaps against candidate ground truths.
struct ScoredMatch {
    double score = 0;
    std::vector<std::pair<int, double>> overlaps;  // (gt id, IoU)
};

/// All-point average precision (precision-envelope area under the PR curve)
/// with greedy score-order matching; a ground truth matches at most once.
double average_precision(std::vector<ScoredMatch> detections, int num_gt, double iou_threshold);

struct MatchCounts {
    long long tp = 0, fp = 0, missed = 0;
};

struct ThresholdReport {
    double f_map = 0, v_map = 0;
    std::map<int, double> f_per_class;
    std::map<int, double> v_per_class;
    MatchCounts f_counts, v_counts;
};

struct MetricsReport {
    std::vector<double> thresholds;
    std::map<std::string, ThresholdReport> at;  // key: "iou_0.2"

    nlohmann::json to_json() const;
};

struct GroundTruthFrame {
    std::string video_id;
    int frame_index = 0;
    int class_id = 0;
    Region region;
};

/// Frame-level and video-level mAP over pooled per-class detections.
MetricsReport evaluate_detections(const std::vector<Detection>& frame_dets,
                                  const std::vector<Tube>& tubes,
                                  const std::vector<GroundTruthFrame>& gt_frames,
                                  const std::vector<Tube>& gt_tubes, int class_count,
                                  const std::vector<double>& thresholds = {0.2, 0.5});

/// Ground-truth extraction for a set of videos.
void dataset_ground_truth(const dataio::Dataset& ds, const std::vector<std::string>& ids,
                          std::vector<GroundTruthFrame>& gt_frames, std::vector<Tube>& gt_tubes);

}  // namespace stssl::evalkit
