#include "stssl/evalkit/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <stdexcept>

#include "stssl/dataio/container.hpp"

namespace stssl::evalkit {

using nlohmann::json;

long long Region::area() const {
    if (kind == Kind::box) {
        if (box.x2 <= box.x1 || box.y2 <= box.y1) return 0;
        return box.area();
    }
    long long n = 0;
    for (auto b : mask) n += b ? 1 : 0;
    return n;
}

Region Region::from_mask(int h, int w, std::vector<std::uint8_t> bits) {
    Region r;
    r.kind = Kind::mask;
    r.mask_h = h;
    r.mask_w = w;
    r.mask = std::move(bits);
    int x1 = w, y1 = h, x2 = 0, y2 = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (r.mask[static_cast<std::size_t>(y) * w + x]) {
                x1 = std::min(x1, x);
                y1 = std::min(y1, y);
                x2 = std::max(x2, x + 1);
                y2 = std::max(y2, y + 1);
            }
    r.box = (x2 > x1) ? dataio::FrameBox{x1, y1, x2, y2} : dataio::FrameBox{0, 0, 0, 0};
    return r;
}

double iou(const Region& a, const Region& b) {
    if (a.kind != b.kind) throw std::invalid_argument("iou: mixed region kinds");
    const long long aa = a.area(), ab = b.area();
    if (aa == 0 && ab == 0) return 0.0;
    if (a.kind == Region::Kind::box) {
        const long long ix = std::max(
            0, std::min(a.box.x2, b.box.x2) - std::max(a.box.x1, b.box.x1));
        const long long iy = std::max(
            0, std::min(a.box.y2, b.box.y2) - std::max(a.box.y1, b.box.y1));
        const long long inter = ix * iy;
        const long long uni = aa + ab - inter;
        return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
    }
    if (a.mask_h != b.mask_h || a.mask_w != b.mask_w)
        throw std::invalid_argument("iou: mask size mismatch");
    long long inter = 0;
    for (std::size_t i = 0; i < a.mask.size(); ++i)
        inter += (a.mask[i] && b.mask[i]) ? 1 : 0;
    const long long uni = aa + ab - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

double tube_iou(const Tube& a, const Tube& b) {
    if (a.span() == 0 || b.span() == 0) return 0.0;
    if (a.frame_step != b.frame_step)
        throw std::invalid_argument("tube_iou: mismatched frame steps");
    const int step = a.frame_step;
    const int is = std::max(a.start_frame, b.start_frame);
    const int ie = std::min(a.end_frame(), b.end_frame());
    if (is > ie) return 0.0;
    // Spans are aligned to the same frame grid.
    if ((is - a.start_frame) % step != 0 || (is - b.start_frame) % step != 0) return 0.0;
    const int inter = (ie - is) / step + 1;
    const int uni = a.span() + b.span() - inter;
    double spatial = 0.0;
    for (int f = is; f <= ie; f += step) {
        const Region& ra = a.regions[static_cast<std::size_t>((f - a.start_frame) / step)];
        const Region& rb = b.regions[static_cast<std::size_t>((f - b.start_frame) / step)];
        spatial += iou(ra, rb);
    }
    spatial /= static_cast<double>(inter);
    return (static_cast<double>(inter) / static_cast<double>(uni)) * spatial;
}

namespace {

/// Largest 8-connected component of a binary plane; returns its mask or empty.
std::vector<std::uint8_t> largest_component(const std::vector<std::uint8_t>& bin, int H, int W) {
    std::vector<int> label(static_cast<std::size_t>(H) * W, -1);
    std::vector<std::uint8_t> best;
    long long best_size = 0;
    std::vector<int> stack;
    int next_label = 0;
    for (int start = 0; start < H * W; ++start) {
        if (!bin[static_cast<std::size_t>(start)] || label[static_cast<std::size_t>(start)] >= 0)
            continue;
        stack.assign(1, start);
        label[static_cast<std::size_t>(start)] = next_label;
        std::vector<int> cells;
        while (!stack.empty()) {
            const int cur = stack.back();
            stack.pop_back();
            cells.push_back(cur);
            const int y = cur / W, x = cur % W;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dy == 0 && dx == 0) continue;
                    const int ny = y + dy, nx = x + dx;
                    if (ny < 0 || ny >= H || nx < 0 || nx >= W) continue;
                    const int ni = ny * W + nx;
                    if (bin[static_cast<std::size_t>(ni)] &&
                        label[static_cast<std::size_t>(ni)] < 0) {
                        label[static_cast<std::size_t>(ni)] = next_label;
                        stack.push_back(ni);
                    }
                }
        }
        if (static_cast<long long>(cells.size()) > best_size) {
            best_size = static_cast<long long>(cells.size());
            best.assign(static_cast<std::size_t>(H) * W, 0);
            for (int c : cells) best[static_cast<std::size_t>(c)] = 1;
        }
        ++next_label;
    }
    return best;
}

}  // namespace

FrameDetections map_to_detections(const Tensor<float>& loc, const std::vector<int>& frame_indices,
                                  const std::vector<double>& class_scores,
                                  const std::string& video_id, dataio::AnnotationMode mode,
                                  double threshold) {
    if (loc.ndim() != 3) throw std::invalid_argument("map_to_detections: expect [T,H,W]");
    const int T = loc.dim(0), H = loc.dim(1), W = loc.dim(2);
    if (static_cast<int>(frame_indices.size()) != T)
        throw std::invalid_argument("map_to_detections: frame index count mismatch");

    int cls = 0;
    double score = class_scores.empty() ? 0.0 : class_scores[0];
    for (std::size_t k = 1; k < class_scores.size(); ++k)
        if (class_scores[k] > score) {
            score = class_scores[k];
            cls = static_cast<int>(k);
        }

    FrameDetections out;
    std::vector<std::uint8_t> bin(static_cast<std::size_t>(H) * W);
    std::vector<std::optional<Region>> per_frame(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                bin[static_cast<std::size_t>(y) * W + x] =
                    loc.at3(t, y, x) >= static_cast<float>(threshold) ? 1 : 0;
        auto comp = largest_component(bin, H, W);
        if (comp.empty()) continue;
        Region r = Region::from_mask(H, W, std::move(comp));
        if (mode == dataio::AnnotationMode::box) r = Region::from_box(r.box);
        per_frame[static_cast<std::size_t>(t)] = r;
        Detection d;
        d.video_id = video_id;
        d.frame_index = frame_indices[static_cast<std::size_t>(t)];
        d.class_id = cls;
        d.score = score;
        d.region = std::move(r);
        out.detections.push_back(std::move(d));
    }

    // Longest contiguous run of non-empty frames forms the tube.
    int best_s = -1, best_len = 0;
    int run_s = -1;
    for (int t = 0; t <= T; ++t) {
        const bool on = t < T && per_frame[static_cast<std::size_t>(t)].has_value();
        if (on && run_s < 0) run_s = t;
        if (!on && run_s >= 0) {
            if (t - run_s > best_len) {
                best_len = t - run_s;
                best_s = run_s;
            }
            run_s = -1;
        }
    }
    if (best_len > 0) {
        Tube tube;
        tube.video_id = video_id;
        tube.class_id = cls;
        tube.score = score;
        tube.start_frame = frame_indices[static_cast<std::size_t>(best_s)];
        tube.frame_step = frame_indices.size() > 1 ? frame_indices[1] - frame_indices[0] : 1;
        for (int t = best_s; t < best_s + best_len; ++t)
            tube.regions.push_back(*per_frame[static_cast<std::size_t>(t)]);
        out.tube = std::move(tube);
    }
    return out;
}

double average_precision(std::vector<ScoredMatch> detections, int num_gt, double iou_threshold) {
    if (num_gt <= 0) return 0.0;
    if (detections.empty()) return 0.0;
    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return detections[a].score > detections[b].score;
    });

    std::set<int> matched;
    std::vector<double> precision, recall;
    long long tp = 0, fp = 0;
    for (std::size_t oi : order) {
        const auto& det = detections[oi];
        int best_gt = -1;
        double best_iou = 0.0;
        for (const auto& [gt, ov] : det.overlaps) {
            if (ov >= iou_threshold && !matched.count(gt) && ov > best_iou) {
                best_iou = ov;
                best_gt = gt;
            }
        }
        if (best_gt >= 0) {
            matched.insert(best_gt);
            ++tp;
        } else {
            ++fp;
        }
        precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(num_gt));
    }

    // Precision envelope, integrated over recall increments.
    for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i)
        precision[static_cast<std::size_t>(i)] =
            std::max(precision[static_cast<std::size_t>(i)], precision[static_cast<std::size_t>(i) + 1]);
    double ap = 0.0, prev_r = 0.0;
    for (std::size_t i = 0; i < precision.size(); ++i) {
        if (recall[i] > prev_r) {
            ap += (recall[i] - prev_r) * precision[i];
            prev_r = recall[i];
        }
    }
    return ap;
}

namespace {

struct ClassPool {
    std::vector<ScoredMatch> dets;
    int num_gt = 0;
    long long tp = 0, fp = 0;
};

/// Shared per-class AP pooling for frames and tubes. `Key` identifies the GT
/// grouping unit (a (video,frame) pair or a video).
template <typename Item, typename GtItem, typename KeyFn, typename GtKeyFn, typename IouFn>
void pool_class(int cls, const std::vector<Item>& items, const std::vector<GtItem>& gts,
                KeyFn key_of, GtKeyFn gt_key_of, IouFn iou_of, ClassPool& pool) {
    std::map<std::string, std::vector<int>> gt_by_key;
    int gt_id = 0;
    for (const auto& gt : gts) {
        if (gt_key_of(gt) != cls) {
            ++gt_id;
            continue;
        }
        gt_by_key[key_of(gt)].push_back(gt_id);
        ++pool.num_gt;
        ++gt_id;
    }
    for (const auto& item : items) {
        ScoredMatch m;
        m.score = item.score;
        auto it = gt_by_key.find(key_of(item));
        if (it != gt_by_key.end())
            for (int id : it->second)
                m.overlaps.emplace_back(id, iou_of(item, gts[static_cast<std::size_t>(id)]));
        pool.dets.push_back(std::move(m));
    }
}

void count_matches(const ClassPool& pool, double th, MatchCounts& counts) {
    // Re-run the greedy matching to report TP/FP/missed totals.
    std::vector<std::size_t> order(pool.dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pool.dets[a].score > pool.dets[b].score;
    });
    std::set<int> matched;
    long long tp = 0, fp = 0;
    for (std::size_t oi : order) {
        int best_gt = -1;
        double best = 0;
        for (const auto& [gt, ov] : pool.dets[oi].overlaps)
            if (ov >= th && !matched.count(gt) && ov > best) {
                best = ov;
                best_gt = gt;
            }
        if (best_gt >= 0) {
            matched.insert(best_gt);
            ++tp;
        } else {
            ++fp;
        }
    }
    counts.tp += tp;
    counts.fp += fp;
    counts.missed += pool.num_gt - tp;
}

}  // namespace

MetricsReport evaluate_detections(const std::vector<Detection>& frame_dets,
                                  const std::vector<Tube>& tubes,
                                  const std::vector<GroundTruthFrame>& gt_frames,
                                  const std::vector<Tube>& gt_tubes, int class_count,
                                  const std::vector<double>& thresholds) {
    for (const auto& d : frame_dets)
        if (d.class_id < 0 || d.class_id >= class_count)
            throw std::invalid_argument("evaluate_detections: unknown class id " +
                                        std::to_string(d.class_id));
    for (const auto& t : tubes)
        if (t.class_id < 0 || t.class_id >= class_count)
            throw std::invalid_argument("evaluate_detections: unknown class id " +
                                        std::to_string(t.class_id));

    auto frame_key = [](const auto& x) { return x.video_id + "#" + std::to_string(x.frame_index); };
    auto video_key = [](const auto& x) { return x.video_id; };

    MetricsReport report;
    report.thresholds = thresholds;
    for (double th : thresholds) {
        ThresholdReport tr;
        double f_sum = 0, v_sum = 0;
        int f_classes = 0, v_classes = 0;
        for (int cls = 0; cls < class_count; ++cls) {
            // Frame-level.
            ClassPool fpool;
            std::vector<Detection> cls_dets;
            for (const auto& d : frame_dets)
                if (d.class_id == cls) cls_dets.push_back(d);
            pool_class(
                cls, cls_dets, gt_frames, frame_key,
                [](const GroundTruthFrame& gt) { return gt.class_id; },
                [](const Detection& d, const GroundTruthFrame& gt) {
                    return iou(d.region, gt.region);
                },
                fpool);
            if (fpool.num_gt > 0) {
                const double ap = average_precision(fpool.dets, fpool.num_gt, th);
                tr.f_per_class[cls] = ap;
                f_sum += ap;
                ++f_classes;
                count_matches(fpool, th, tr.f_counts);
            }
            // Video-level.
            ClassPool vpool;
            std::vector<Tube> cls_tubes;
            for (const auto& t : tubes)
                if (t.class_id == cls) cls_tubes.push_back(t);
            pool_class(
                cls, cls_tubes, gt_tubes, video_key,
                [](const Tube& gt) { return gt.class_id; },
                [](const Tube& a, const Tube& b) { return tube_iou(a, b); }, vpool);
            if (vpool.num_gt > 0) {
                const double ap = average_precision(vpool.dets, vpool.num_gt, th);
                tr.v_per_class[cls] = ap;
                v_sum += ap;
                ++v_classes;
                count_matches(vpool, th, tr.v_counts);
            }
        }
        tr.f_map = f_classes ? f_sum / f_classes : 0.0;
        tr.v_map = v_classes ? v_sum / v_classes : 0.0;
        char key[32];
        std::snprintf(key, sizeof(key), "iou_%.1f", th);
        report.at[key] = std::move(tr);
    }
    return report;
}

void dataset_ground_truth(const dataio::Dataset& ds, const std::vector<std::string>& ids,
                          std::vector<GroundTruthFrame>& gt_frames, std::vector<Tube>& gt_tubes) {
    for (const auto& id : ids) {
        const auto& va = ds.annotation(id);
        Tube tube;
        tube.video_id = id;
        tube.class_id = va.class_id;
        tube.score = 1.0;
        tube.frame_step = 1;
        bool first = true;
        auto add_region = [&](int t, Region r) {
            GroundTruthFrame gf;
            gf.video_id = id;
            gf.frame_index = t;
            gf.class_id = va.class_id;
            gf.region = r;
            gt_frames.push_back(std::move(gf));
            if (first) {
                tube.start_frame = t;
                first = false;
            }
            tube.regions.push_back(std::move(r));
        };
        if (ds.ann.mode == dataio::AnnotationMode::box) {
            for (const auto& [t, box] : va.boxes) add_region(t, Region::from_box(box));
        } else {
            for (const auto& [t, path] : va.masks) {
                const auto m = dataio::read_clip_container(ds.root / path);
                std::vector<std::uint8_t> bits(static_cast<std::size_t>(m.H) * m.W);
                for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = m.pix[i] >= 128 ? 1 : 0;
                add_region(t, Region::from_mask(m.H, m.W, std::move(bits)));
            }
        }
        if (!tube.regions.empty()) gt_tubes.push_back(std::move(tube));
    }
}

json MetricsReport::to_json() const {
    json j;
    json counts;
    for (const auto& [key, tr] : at) {
        json jt;
        jt["f_map"] = tr.f_map;
        jt["v_map"] = tr.v_map;
        json pc;
        for (const auto& [cls, ap] : tr.f_per_class) pc["f_" + std::to_string(cls)] = ap;
        for (const auto& [cls, ap] : tr.v_per_class) pc["v_" + std::to_string(cls)] = ap;
        jt["per_class"] = pc;
        j[key] = jt;
        counts[key] = {{"f_tp", tr.f_counts.tp},     {"f_fp", tr.f_counts.fp},
                       {"f_missed", tr.f_counts.missed}, {"v_tp", tr.v_counts.tp},
                       {"v_fp", tr.v_counts.fp},     {"v_missed", tr.v_counts.missed}};
    }
    j["counts"] = counts;
    return j;
}

}  // namespace stssl::evalkit
