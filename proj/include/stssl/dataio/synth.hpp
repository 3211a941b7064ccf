#pragma once

#include <cstdint>
#include <filesystem>

#include "stssl/dataio/types.hpp"

namespace stssl::dataio {

/// Shape motion per class. The class IS the motion pattern; shape geometry
/// and appearance vary freely per video so appearance alone cannot identify
/// the class.
enum class MotionKind { translate_right, translate_down, diagonal, oscillate, circular };

const char* motion_name(MotionKind k);

struct MotionParams {
    MotionKind kind = MotionKind::translate_right;
    double x0 = 0, y0 = 0;    // start / center position
    double vx = 0, vy = 0;    // translation velocities (px per frame)
    double amp = 0;           // oscillation amplitude
    double omega = 0;         // angular velocity (rad per frame)
    double phase = 0;
    double radius = 0;        // circular motion radius
};

/// Analytic shape center at frame t.
void motion_center(const MotionParams& p, int t, double& cx, double& cy);

enum class ShapeKind { square, circle, diamond, triangle };

struct ShapeSpec {
    ShapeKind kind = ShapeKind::square;
    double size = 12;     // bounding size in pixels
    float color[3] = {1, 1, 1};
};

/// Pixel-center inclusion test against the analytic shape at (cx,cy).
bool shape_contains(const ShapeSpec& s, double cx, double cy, double px, double py);

struct SynthConfig {
    int num_videos = 40;
    int classes = 5;
    int frames_per_video = 16;
    int height = 64;
    int width = 64;
    double untrimmed_fraction = 0.0;
    std::uint64_t seed = 0;
    AnnotationMode mode = AnnotationMode::box;
    double val_fraction = 0.2;   // generator-held-out validation share
    int distractors = 1;         // static decoy shapes per video
    double shape_min = 10.0;
    double shape_max = 18.0;
};

struct SynthSummary {
    int num_videos = 0;
    int classes = 0;
    int untrimmed = 0;
    int val_videos = 0;
};

/// Writes clip containers, annotations.json, val_split.json and genmeta.json
/// (the generator's own action-interval log) under `root`. Bit-reproducible
/// for a fixed (config, seed).
SynthSummary generate_synthetic_dataset(const SynthConfig& cfg,
                                        const std::filesystem::path& root);

}  // namespace stssl::dataio
