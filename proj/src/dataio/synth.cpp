#include "stssl/dataio/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "stssl/core/io.hpp"
#include "stssl/core/rng.hpp"
#include "stssl/dataio/container.hpp"

namespace stssl::dataio {

using nlohmann::json;

const char* motion_name(MotionKind k) {
    switch (k) {
        case MotionKind::translate_right: return "translate-right";
        case MotionKind::translate_down: return "translate-down";
        case MotionKind::diagonal: return "diagonal";
        case MotionKind::oscillate: return "oscillate";
        case MotionKind::circular: return "circular";
    }
    return "?";
}

void motion_center(const MotionParams& p, int t, double& cx, double& cy) {
    const double td = static_cast<double>(t);
    switch (p.kind) {
        case MotionKind::translate_right:
            cx = p.x0 + p.vx * td;
            cy = p.y0;
            break;
        case MotionKind::translate_down:
            cx = p.x0;
            cy = p.y0 + p.vy * td;
            break;
        case MotionKind::diagonal:
            cx = p.x0 + p.vx * td;
            cy = p.y0 + p.vy * td;
            break;
        case MotionKind::oscillate:
            cx = p.x0 + p.amp * std::sin(p.omega * td + p.phase);
            cy = p.y0;
            break;
        case MotionKind::circular:
            cx = p.x0 + p.radius * std::cos(p.omega * td + p.phase);
            cy = p.y0 + p.radius * std::sin(p.omega * td + p.phase);
            break;
    }
}

bool shape_contains(const ShapeSpec& s, double cx, double cy, double px, double py) {
    const double dx = px - cx;
    const double dy = py - cy;
    const double hs = s.size * 0.5;
    switch (s.kind) {
        case ShapeKind::square:
            return dx >= -hs && dx < hs && dy >= -hs && dy < hs;
        case ShapeKind::circle:
            return dx * dx + dy * dy <= hs * hs;
        case ShapeKind::diamond:
            return std::abs(dx) + std::abs(dy) <= hs;
        case ShapeKind::triangle:
            // Upward triangle: apex at the top of the bounding square.
            return dy >= -hs && dy < hs && std::abs(dx) <= 0.5 * (dy + hs);
    }
    return false;
}

namespace {

struct VideoPlan {
    std::string id;
    int class_id = 0;
    bool untrimmed = false;
    int action_start = 0, action_end = 0;  // [start, end)
    MotionParams motion;
    ShapeSpec shape;
    ShapeSpec distractors[4];
    double dis_cx[4], dis_cy[4];
    int n_distractors = 0;
    int tex_kind = 0;
    double tex_theta = 0, tex_lambda = 10, tex_phase = 0;
    int tex_block = 6;
    float colA[3], colB[3];
    double blob_cx[5], blob_cy[5], blob_s[5];
    int n_blobs = 0;
    std::uint64_t noise_seed = 0;
    double noise_amp = 0.05;
};

double luminance(const float* c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

void random_color(Rng& rng, float* c) {
    for (int i = 0; i < 3; ++i) c[i] = static_cast<float>(rng.uniform(0.05, 0.95));
}

/// Background gray field in [0,1].
double texture_value(const VideoPlan& p, int x, int y) {
    switch (p.tex_kind) {
        case 0:
            return 0.5 + 0.5 * std::sin(2.0 * M_PI *
                                            (x * std::cos(p.tex_theta) + y * std::sin(p.tex_theta)) /
                                            p.tex_lambda +
                                        p.tex_phase);
        case 1:
            return ((x / p.tex_block) + (y / p.tex_block)) % 2 == 0 ? 0.15 : 0.85;
        case 2: {
            double v = 0;
            for (int i = 0; i < p.n_blobs; ++i) {
                const double dx = x - p.blob_cx[i], dy = y - p.blob_cy[i];
                v += std::exp(-(dx * dx + dy * dy) / (2.0 * p.blob_s[i] * p.blob_s[i]));
            }
            return std::min(1.0, v);
        }
        default: {
            const double u = (x * std::cos(p.tex_theta) + y * std::sin(p.tex_theta)) /
                             std::max(1.0, std::hypot(64.0, 64.0));
            return 0.5 + 0.45 * std::sin(2.0 * M_PI * u + p.tex_phase);
        }
    }
}

double pixel_noise(std::uint64_t seed, int x, int y, int c) {
    std::uint64_t h = seed ^ (static_cast<std::uint64_t>(x) * 0x9e3779b97f4a7c15ULL) ^
                      (static_cast<std::uint64_t>(y) * 0xc2b2ae3d27d4eb4fULL) ^
                      (static_cast<std::uint64_t>(c) * 0x165667b19e3779f9ULL);
    h = splitmix64(h);
    return (static_cast<double>(h >> 11) * 0x1.0p-53 - 0.5);
}

ShapeSpec random_shape(Rng& rng, const SynthConfig& cfg) {
    ShapeSpec s;
    s.kind = static_cast<ShapeKind>(rng.uniform_int(4));
    s.size = rng.uniform(cfg.shape_min, cfg.shape_max);
    random_color(rng, s.color);
    return s;
}

MotionParams plan_motion(Rng& rng, MotionKind kind, const SynthConfig& cfg, double shape_size) {
    const int n = cfg.frames_per_video;
    const double margin = 2.0;
    const double hs = shape_size * 0.5;
    const double lo_x = hs + margin, hi_x = cfg.width - 1 - hs - margin;
    const double lo_y = hs + margin, hi_y = cfg.height - 1 - hs - margin;
    if (hi_x <= lo_x || hi_y <= lo_y) {
        std::ostringstream os;
        os << "synthetic generator: shape of size " << shape_size << " does not fit a "
           << cfg.width << "x" << cfg.height << " frame";
        throw std::invalid_argument(os.str());
    }
    const double extent_x = hi_x - lo_x, extent_y = hi_y - lo_y;
    MotionParams p;
    p.kind = kind;
    switch (kind) {
        case MotionKind::translate_right: {
            const double vmax = extent_x / std::max(1, n - 1);
            p.vx = rng.uniform(std::min(1.5, 0.6 * vmax), std::min(2.5, vmax));
            p.x0 = rng.uniform(lo_x, hi_x - p.vx * (n - 1));
            p.y0 = rng.uniform(lo_y, hi_y);
            break;
        }
        case MotionKind::translate_down: {
            const double vmax = extent_y / std::max(1, n - 1);
            p.vy = rng.uniform(std::min(1.5, 0.6 * vmax), std::min(2.5, vmax));
            p.y0 = rng.uniform(lo_y, hi_y - p.vy * (n - 1));
            p.x0 = rng.uniform(lo_x, hi_x);
            break;
        }
        case MotionKind::diagonal: {
            const double vmax =
                std::min(extent_x, extent_y) / std::max(1, n - 1);
            p.vx = rng.uniform(std::min(1.2, 0.5 * vmax), std::min(2.0, vmax));
            p.vy = rng.uniform(std::min(1.2, 0.5 * vmax), std::min(2.0, vmax));
            p.x0 = rng.uniform(lo_x, hi_x - p.vx * (n - 1));
            p.y0 = rng.uniform(lo_y, hi_y - p.vy * (n - 1));
            break;
        }
        case MotionKind::oscillate: {
            p.amp = rng.uniform(std::min(7.0, 0.3 * extent_x), std::min(16.0, 0.5 * extent_x));
            p.omega = rng.uniform(0.75, 1.5) * 2.0 * M_PI / n;
            p.phase = rng.uniform(0.0, 2.0 * M_PI);
            p.x0 = rng.uniform(lo_x + p.amp, hi_x - p.amp);
            p.y0 = rng.uniform(lo_y, hi_y);
            break;
        }
        case MotionKind::circular: {
            p.radius = rng.uniform(std::min(5.0, 0.25 * extent_x), std::min(11.0, 0.45 * extent_x));
            p.omega = rng.uniform(0.75, 1.25) * 2.0 * M_PI / n;
            p.phase = rng.uniform(0.0, 2.0 * M_PI);
            p.x0 = rng.uniform(lo_x + p.radius, hi_x - p.radius);
            p.y0 = rng.uniform(lo_y + p.radius, hi_y - p.radius);
            break;
        }
    }
    return p;
}

VideoPlan plan_video(Rng rng, int index, int class_id, bool untrimmed, const SynthConfig& cfg) {
    VideoPlan p;
    {
        std::ostringstream os;
        os << "video_" << std::setw(4) << std::setfill('0') << index;
        p.id = os.str();
    }
    p.class_id = class_id;
    p.untrimmed = untrimmed;

    // Background.
    p.tex_kind = rng.uniform_int(4);
    p.tex_theta = rng.uniform(0.0, M_PI);
    p.tex_lambda = rng.uniform(6.0, 20.0);
    p.tex_phase = rng.uniform(0.0, 2.0 * M_PI);
    p.tex_block = 4 + rng.uniform_int(7);
    random_color(rng, p.colA);
    random_color(rng, p.colB);
    p.n_blobs = 3 + rng.uniform_int(3);
    for (int i = 0; i < p.n_blobs; ++i) {
        p.blob_cx[i] = rng.uniform(0.0, cfg.width - 1.0);
        p.blob_cy[i] = rng.uniform(0.0, cfg.height - 1.0);
        p.blob_s[i] = rng.uniform(6.0, 16.0);
    }
    p.noise_seed = rng.next();
    p.noise_amp = rng.uniform(0.02, 0.06);

    // Action shape with luminance contrast against the background colors.
    p.shape = random_shape(rng, cfg);
    const double bg_lum = 0.5 * (luminance(p.colA) + luminance(p.colB));
    for (int tries = 0; tries < 64; ++tries) {
        if (std::abs(luminance(p.shape.color) - bg_lum) >= 0.25) break;
        random_color(rng, p.shape.color);
    }
    if (std::abs(luminance(p.shape.color) - bg_lum) < 0.25) {
        const float v = bg_lum > 0.5 ? 0.05f : 0.95f;
        p.shape.color[0] = p.shape.color[1] = p.shape.color[2] = v;
    }

    p.motion = plan_motion(rng, static_cast<MotionKind>(class_id), cfg, p.shape.size);

    // Static distractors.
    p.n_distractors = std::min(4, cfg.distractors);
    for (int i = 0; i < p.n_distractors; ++i) {
        p.distractors[i] = random_shape(rng, cfg);
        const double hs = p.distractors[i].size * 0.5;
        p.dis_cx[i] = rng.uniform(hs + 1.0, cfg.width - 1.0 - hs);
        p.dis_cy[i] = rng.uniform(hs + 1.0, cfg.height - 1.0 - hs);
    }

    // Action interval.
    p.action_start = 0;
    p.action_end = cfg.frames_per_video;
    if (untrimmed) {
        const int n = cfg.frames_per_video;
        const int min_len = std::max(4, n / 2);
        const int len = min_len + rng.uniform_int(std::max(1, n - 2 - min_len + 1));
        p.action_start = rng.uniform_int(n - len + 1);
        p.action_end = p.action_start + len;
    }
    return p;
}

}  // namespace

SynthSummary generate_synthetic_dataset(const SynthConfig& cfg,
                                        const std::filesystem::path& root) {
    if (cfg.classes < 2) throw std::invalid_argument("synth: classes must be >= 2");
    if (cfg.classes > 5)
        throw std::invalid_argument("synth: at most 5 motion classes are defined");
    if (cfg.frames_per_video < 8)
        throw std::invalid_argument("synth: frames_per_video must be >= 8");
    if (cfg.shape_max + 6.0 > std::min(cfg.height, cfg.width)) {
        std::ostringstream os;
        os << "synth: max shape size " << cfg.shape_max << " too large for " << cfg.width << "x"
           << cfg.height << " frames";
        throw std::invalid_argument(os.str());
    }
    if (cfg.untrimmed_fraction < 0 || cfg.untrimmed_fraction > 1)
        throw std::invalid_argument("synth: untrimmed_fraction must be in [0,1]");

    std::filesystem::create_directories(root);
    if (cfg.mode == AnnotationMode::mask) std::filesystem::create_directories(root / "masks");

    Rng master(cfg.seed);

    // Deterministic untrimmed/validation selection.
    const int n_untrimmed =
        static_cast<int>(std::llround(cfg.untrimmed_fraction * cfg.num_videos));
    std::vector<int> order(static_cast<std::size_t>(cfg.num_videos));
    for (int i = 0; i < cfg.num_videos; ++i) order[static_cast<std::size_t>(i)] = i;
    {
        Rng r = master.split("untrimmed");
        r.shuffle(order.begin(), order.end());
    }
    std::vector<bool> untrimmed(static_cast<std::size_t>(cfg.num_videos), false);
    for (int i = 0; i < n_untrimmed; ++i) untrimmed[static_cast<std::size_t>(order[i])] = true;

    // Plans (class id round-robin keeps classes balanced).
    std::vector<VideoPlan> plans;
    plans.reserve(static_cast<std::size_t>(cfg.num_videos));
    for (int i = 0; i < cfg.num_videos; ++i) {
        const int cls = i % cfg.classes;
        plans.push_back(plan_video(master.split("video_" + std::to_string(i)), i, cls,
                                   untrimmed[static_cast<std::size_t>(i)], cfg));
    }

    // Stratified validation hold-out.
    std::vector<bool> is_val(static_cast<std::size_t>(cfg.num_videos), false);
    {
        Rng r = master.split("val_split");
        std::map<int, std::vector<int>> per_class;
        for (int i = 0; i < cfg.num_videos; ++i)
            per_class[plans[static_cast<std::size_t>(i)].class_id].push_back(i);
        for (auto& [cls, idxs] : per_class) {
            r.shuffle(idxs.begin(), idxs.end());
            const int take = static_cast<int>(std::llround(cfg.val_fraction * idxs.size()));
            for (int i = 0; i < take; ++i) is_val[static_cast<std::size_t>(idxs[i])] = true;
        }
    }

    json ann;
    ann["class_names"] = json::array();
    for (int c = 0; c < cfg.classes; ++c)
        ann["class_names"].push_back(motion_name(static_cast<MotionKind>(c)));
    ann["mode"] = to_string(cfg.mode);
    ann["videos"] = json::array();

    json meta;
    meta["seed"] = cfg.seed;
    meta["videos"] = json::array();

    std::vector<std::string> val_ids;
    Tensor<float> bg({cfg.height, cfg.width, 3});

    for (const auto& plan : plans) {
        // Static background plane.
        for (int y = 0; y < cfg.height; ++y)
            for (int x = 0; x < cfg.width; ++x) {
                const double t = texture_value(plan, x, y);
                for (int c = 0; c < 3; ++c) {
                    double v = plan.colA[c] + t * (plan.colB[c] - plan.colA[c]);
                    v += plan.noise_amp * pixel_noise(plan.noise_seed, x, y, c);
                    bg.at3(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
                }
            }
        for (int i = 0; i < plan.n_distractors; ++i) {
            const auto& d = plan.distractors[i];
            for (int y = 0; y < cfg.height; ++y)
                for (int x = 0; x < cfg.width; ++x)
                    if (shape_contains(d, plan.dis_cx[i], plan.dis_cy[i], x + 0.5, y + 0.5))
                        for (int c = 0; c < 3; ++c) bg.at3(y, x, c) = d.color[c];
        }

        VideoU8 vid;
        vid.T = cfg.frames_per_video;
        vid.H = cfg.height;
        vid.W = cfg.width;
        vid.C = 3;
        vid.pix.assign(static_cast<std::size_t>(vid.T) * vid.H * vid.W * 3, 0);

        json frames = json::object();
        for (int t = 0; t < cfg.frames_per_video; ++t) {
            const bool active = t >= plan.action_start && t < plan.action_end;
            double cx = 0, cy = 0;
            if (active) motion_center(plan.motion, t, cx, cy);
            int bx1 = cfg.width, by1 = cfg.height, bx2 = -1, by2 = -1;
            std::vector<std::uint8_t> mask;
            if (active && cfg.mode == AnnotationMode::mask)
                mask.assign(static_cast<std::size_t>(cfg.height) * cfg.width, 0);
            for (int y = 0; y < cfg.height; ++y) {
                for (int x = 0; x < cfg.width; ++x) {
                    bool fg = active && shape_contains(plan.shape, cx, cy, x + 0.5, y + 0.5);
                    for (int c = 0; c < 3; ++c) {
                        const float v = fg ? plan.shape.color[c] : bg.at3(y, x, c);
                        vid.at(t, y, x, c) = static_cast<std::uint8_t>(
                            std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
                    }
                    if (fg) {
                        bx1 = std::min(bx1, x);
                        by1 = std::min(by1, y);
                        bx2 = std::max(bx2, x + 1);
                        by2 = std::max(by2, y + 1);
                        if (!mask.empty())
                            mask[static_cast<std::size_t>(y) * cfg.width + x] = 255;
                    }
                }
            }
            if (active) {
                if (bx2 < 0)
                    throw std::logic_error("synth: action shape rasterized to empty mask");
                if (cfg.mode == AnnotationMode::box) {
                    frames[std::to_string(t)] = json::array({bx1, by1, bx2, by2});
                } else {
                    VideoU8 m;
                    m.T = 1;
                    m.H = cfg.height;
                    m.W = cfg.width;
                    m.C = 1;
                    m.pix = std::move(mask);
                    const std::string rel =
                        "masks/" + plan.id + "_f" + std::to_string(t) + ".stm";
                    write_clip_container(root / rel, m);
                    frames[std::to_string(t)] = rel;
                }
            }
        }

        write_clip_container(root / (plan.id + ".stv"), vid);

        json jv;
        jv["id"] = plan.id;
        jv["class_id"] = plan.class_id;
        jv["trimmed"] = !plan.untrimmed;
        jv["frames"] = frames;
        ann["videos"].push_back(jv);

        json jm;
        jm["id"] = plan.id;
        jm["class_id"] = plan.class_id;
        jm["action_start"] = plan.action_start;
        jm["action_end"] = plan.action_end;
        jm["motion"] = motion_name(plan.motion.kind);
        jm["shape_size"] = plan.shape.size;
        meta["videos"].push_back(jm);

        if (is_val[static_cast<std::size_t>(&plan - plans.data())])
            val_ids.push_back(plan.id);
    }

    write_json_file(root / "annotations.json", ann);
    write_json_file(root / "genmeta.json", meta);
    json vs;
    vs["val_ids"] = val_ids;
    write_json_file(root / "val_split.json", vs);

    SynthSummary s;
    s.num_videos = cfg.num_videos;
    s.classes = cfg.classes;
    s.untrimmed = n_untrimmed;
    s.val_videos = static_cast<int>(val_ids.size());
    return s;
}

}  // namespace stssl::dataio
