#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "stssl/core/tensor.hpp"

namespace stssl::dataio {

/// Raw stored video, frame-major THWC uint8.
struct VideoU8 {
    int T = 0, H = 0, W = 0, C = 0;
    std::vector<std::uint8_t> pix;

    std::uint8_t at(int t, int h, int w, int c) const {
        return pix[((static_cast<std::size_t>(t) * H + h) * W + w) * C + c];
    }
    std::uint8_t& at(int t, int h, int w, int c) {
        return pix[((static_cast<std::size_t>(t) * H + h) * W + w) * C + c];
    }
};

/// Training unit: a float THWC block in [0,1] with provenance.
struct Clip {
    Tensor<float> pixels;  // [T,H,W,C]
    std::string video_id;
    std::vector<int> frame_indices;
    double fps = 24.0;

    int frames() const { return pixels.ndim() ? pixels.dim(0) : 0; }
    int height() const { return pixels.dim(1); }
    int width() const { return pixels.dim(2); }
    int channels() const { return pixels.dim(3); }
};

/// Half-open pixel box [x1,x2) x [y1,y2).
struct FrameBox {
    int x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    int width() const { return x2 - x1; }
    int height() const { return y2 - y1; }
    long long area() const { return static_cast<long long>(width()) * height(); }
};

enum class AnnotationMode { box, mask };

inline const char* to_string(AnnotationMode m) {
    return m == AnnotationMode::box ? "box" : "mask";
}

struct VideoAnnotation {
    std::string id;
    int class_id = 0;
    bool trimmed = true;
    std::map<int, FrameBox> boxes;        // box mode: frame index -> box
    std::map<int, std::string> masks;     // mask mode: frame index -> container path

    bool has_frame(int t) const {
        return boxes.count(t) > 0 || masks.count(t) > 0;
    }
    int annotated_frames() const {
        return static_cast<int>(boxes.empty() ? masks.size() : boxes.size());
    }
};

struct DatasetAnnotations {
    std::vector<std::string> class_names;
    AnnotationMode mode = AnnotationMode::box;
    std::vector<VideoAnnotation> videos;
};

/// A fully loaded dataset, pixels resident in memory.
struct Dataset {
    std::filesystem::path root;
    DatasetAnnotations ann;
    std::unordered_map<std::string, VideoU8> videos;
    std::unordered_map<std::string, std::size_t> ann_of;  // id -> index into ann.videos
    std::vector<std::string> train_ids;  // all ids not held out for validation
    std::vector<std::string> val_ids;    // generator-held-out validation ids

    int class_count() const { return static_cast<int>(ann.class_names.size()); }
    const VideoAnnotation& annotation(const std::string& id) const {
        return ann.videos[ann_of.at(id)];
    }
    const VideoU8& video(const std::string& id) const { return videos.at(id); }
};

/// Labeled/unlabeled partition of the training pool (the spec's DatasetIndex).
struct SplitIndex {
    std::vector<std::string> labeled_ids;
    std::vector<std::string> unlabeled_ids;
    int class_count = 0;
    AnnotationMode mode = AnnotationMode::box;
};

/// One element of a training batch.
struct BatchItem {
    Clip clip;
    bool labeled = false;
    int class_id = -1;
    Tensor<float> gt;  // [T,H,W] binary mask; empty for unlabeled items
};

struct MixedBatch {
    std::vector<BatchItem> items;

    int labeled_count() const {
        int n = 0;
        for (const auto& it : items) n += it.labeled ? 1 : 0;
        return n;
    }
    int unlabeled_count() const { return static_cast<int>(items.size()) - labeled_count(); }
};

}  // namespace stssl::dataio
