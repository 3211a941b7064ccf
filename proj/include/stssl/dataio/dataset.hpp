#pragma once

#include <cstdint>
#include <filesystem>

#include "stssl/core/rng.hpp"
#include "stssl/dataio/types.hpp"

namespace stssl::dataio {

/// Loads annotations.json plus every referenced clip container, enforcing the
/// annotation invariants. Load failures name the offending record.
Dataset load_dataset(const std::filesystem::path& root);

/// Per-class stratified labeled/unlabeled split of the dataset's training
/// pool. labeled count per class = round(fraction * class count).
SplitIndex split_labeled(const Dataset& ds, double labeled_fraction, std::uint64_t seed);

/// Keeps at most `max_unlabeled` unlabeled ids (deterministic prefix), for
/// unlabeled-amount sweeps.
void limit_unlabeled(SplitIndex& index, int max_unlabeled);

void write_split_manifest(const std::filesystem::path& path, const SplitIndex& index,
                          double labeled_fraction, std::uint64_t seed);
SplitIndex read_split_manifest(const std::filesystem::path& path, const Dataset& ds);

/// Extracts a clip of `num_frames` frames starting at `start` with frame step
/// `skip`, rescaled to (out_h, out_w). Throws when the video is too short.
Clip extract_clip(const Dataset& ds, const std::string& video_id, int start,
                  int num_frames = 8, int skip = 2, int out_h = -1, int out_w = -1);

/// Ground-truth binary mask [T,H,W] for the clip's frames at the clip's
/// resolution. Box annotations rasterize to filled rectangles; frames without
/// an annotation entry are all-zero.
Tensor<float> clip_ground_truth(const Dataset& ds, const std::string& video_id,
                                const std::vector<int>& frame_indices, int out_h, int out_w);

/// Number of valid clip start positions for a video.
int valid_clip_starts(int video_len, int num_frames, int skip);

}  // namespace stssl::dataio
