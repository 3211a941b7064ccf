#include "stssl/dataio/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stssl/core/io.hpp"
#include "stssl/core/resample.hpp"
#include "stssl/dataio/container.hpp"

namespace stssl::dataio {

using nlohmann::json;

namespace {

[[noreturn]] void load_fail(const std::string& what, const std::string& record) {
    throw std::runtime_error("load_dataset: " + what + " (record: " + record + ")");
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& root) {
    const auto ann_path = root / "annotations.json";
    if (!std::filesystem::exists(ann_path))
        throw std::runtime_error("load_dataset: missing annotations.json under " + root.string());
    json j = read_json_file(ann_path);

    Dataset ds;
    ds.root = root;
    if (!j.contains("class_names") || !j.contains("mode") || !j.contains("videos"))
        throw std::runtime_error("load_dataset: annotations.json missing required keys");
    ds.ann.class_names = j["class_names"].get<std::vector<std::string>>();
    const std::string mode = j["mode"].get<std::string>();
    if (mode == "box") ds.ann.mode = AnnotationMode::box;
    else if (mode == "mask") ds.ann.mode = AnnotationMode::mask;
    else throw std::runtime_error("load_dataset: unknown mode '" + mode + "'");

    const int K = static_cast<int>(ds.ann.class_names.size());
    std::set<std::string> seen;
    for (const auto& jv : j["videos"]) {
        VideoAnnotation va;
        va.id = jv.at("id").get<std::string>();
        va.class_id = jv.at("class_id").get<int>();
        va.trimmed = jv.at("trimmed").get<bool>();
        if (!seen.insert(va.id).second) load_fail("duplicate video_id", va.id);
        if (va.class_id < 0 || va.class_id >= K) load_fail("class_id out of range", va.id);

        const auto cpath = root / (va.id + ".stv");
        VideoU8 vid = read_clip_container(cpath);  // throws "missing container" when absent
        for (auto it = jv.at("frames").begin(); it != jv.at("frames").end(); ++it) {
            int t = -1;
            try {
                t = std::stoi(it.key());
            } catch (...) {
                load_fail("non-integer frame index '" + it.key() + "'", va.id);
            }
            if (t < 0 || t >= vid.T)
                load_fail("frame index " + std::to_string(t) + " out of range", va.id);
            if (ds.ann.mode == AnnotationMode::box) {
                const auto arr = it.value();
                if (!arr.is_array() || arr.size() != 4)
                    load_fail("frame " + std::to_string(t) + " box must be [x1,y1,x2,y2]", va.id);
                FrameBox b{arr[0].get<int>(), arr[1].get<int>(), arr[2].get<int>(),
                           arr[3].get<int>()};
                if (b.x1 >= b.x2 || b.y1 >= b.y2)
                    load_fail("degenerate box at frame " + std::to_string(t), va.id);
                if (b.x1 < 0 || b.y1 < 0 || b.x2 > vid.W || b.y2 > vid.H)
                    load_fail("box out of bounds at frame " + std::to_string(t), va.id);
                va.boxes[t] = b;
            } else {
                va.masks[t] = it.value().get<std::string>();
                const auto mpath = root / va.masks[t];
                if (!std::filesystem::exists(mpath))
                    load_fail("missing mask container " + va.masks[t], va.id);
            }
        }
        if (va.trimmed) {
            for (int t = 0; t < vid.T; ++t)
                if (!va.has_frame(t))
                    load_fail("trimmed video lacks annotation at frame " + std::to_string(t),
                              va.id);
        }
        ds.ann_of[va.id] = ds.ann.videos.size();
        ds.ann.videos.push_back(std::move(va));
        ds.videos.emplace(ds.ann.videos.back().id, std::move(vid));
    }

    // Generator-held-out validation split, when present.
    const auto vpath = root / "val_split.json";
    std::set<std::string> val;
    if (std::filesystem::exists(vpath)) {
        json jv = read_json_file(vpath);
        for (const auto& id : jv.at("val_ids")) {
            const std::string s = id.get<std::string>();
            if (!ds.ann_of.count(s)) load_fail("val id references unknown video", s);
            val.insert(s);
        }
    }
    for (const auto& va : ds.ann.videos) {
        if (val.count(va.id)) ds.val_ids.push_back(va.id);
        else ds.train_ids.push_back(va.id);
    }
    return ds;
}

SplitIndex split_labeled(const Dataset& ds, double labeled_fraction, std::uint64_t seed) {
    if (labeled_fraction <= 0.0 || labeled_fraction > 1.0)
        throw std::invalid_argument("split_labeled: fraction must be in (0,1]");
    std::map<int, std::vector<std::string>> per_class;
    for (const auto& id : ds.train_ids) per_class[ds.annotation(id).class_id].push_back(id);

    SplitIndex out;
    out.class_count = ds.class_count();
    out.mode = ds.ann.mode;
    Rng rng = Rng(seed).split("labeled_split");
    for (auto& [cls, ids] : per_class) {
        rng.shuffle(ids.begin(), ids.end());
        const int take = static_cast<int>(std::llround(labeled_fraction * ids.size()));
        if (take == 0)
            throw std::runtime_error("split_labeled: fraction " +
                                     std::to_string(labeled_fraction) +
                                     " yields zero labeled samples for class " +
                                     std::to_string(cls));
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (static_cast<int>(i) < take) out.labeled_ids.push_back(ids[i]);
            else out.unlabeled_ids.push_back(ids[i]);
        }
    }
    std::sort(out.labeled_ids.begin(), out.labeled_ids.end());
    std::sort(out.unlabeled_ids.begin(), out.unlabeled_ids.end());
    return out;
}

void limit_unlabeled(SplitIndex& index, int max_unlabeled) {
    if (max_unlabeled < 0) return;
    if (static_cast<int>(index.unlabeled_ids.size()) > max_unlabeled)
        index.unlabeled_ids.resize(static_cast<std::size_t>(max_unlabeled));
}

void write_split_manifest(const std::filesystem::path& path, const SplitIndex& index,
                          double labeled_fraction, std::uint64_t seed) {
    json j;
    j["seed"] = seed;
    j["labeled_fraction"] = labeled_fraction;
    j["labeled_ids"] = index.labeled_ids;
    j["unlabeled_ids"] = index.unlabeled_ids;
    write_json_file(path, j);
}

SplitIndex read_split_manifest(const std::filesystem::path& path, const Dataset& ds) {
    json j = read_json_file(path);
    SplitIndex out;
    out.class_count = ds.class_count();
    out.mode = ds.ann.mode;
    out.labeled_ids = j.at("labeled_ids").get<std::vector<std::string>>();
    out.unlabeled_ids = j.at("unlabeled_ids").get<std::vector<std::string>>();
    for (const auto& id : out.labeled_ids)
        if (!ds.ann_of.count(id)) throw std::runtime_error("split manifest: unknown id " + id);
    for (const auto& id : out.unlabeled_ids)
        if (!ds.ann_of.count(id)) throw std::runtime_error("split manifest: unknown id " + id);
    return out;
}

int valid_clip_starts(int video_len, int num_frames, int skip) {
    return video_len - (num_frames - 1) * skip;
}

Clip extract_clip(const Dataset& ds, const std::string& video_id, int start, int num_frames,
                  int skip, int out_h, int out_w) {
    const VideoU8& vid = ds.video(video_id);
    if (num_frames < 2) throw std::invalid_argument("extract_clip: need at least 2 frames");
    if (skip < 1) throw std::invalid_argument("extract_clip: skip must be >= 1");
    if (start < 0 || start + (num_frames - 1) * skip >= vid.T) {
        std::ostringstream os;
        os << "extract_clip: insufficient frames in " << video_id << " (len " << vid.T
           << ", start " << start << ", num " << num_frames << ", skip " << skip << ")";
        throw std::out_of_range(os.str());
    }
    if (out_h <= 0) out_h = vid.H;
    if (out_w <= 0) out_w = vid.W;

    Clip clip;
    clip.video_id = video_id;
    clip.pixels = Tensor<float>({num_frames, out_h, out_w, vid.C});
    clip.frame_indices.resize(static_cast<std::size_t>(num_frames));

    const bool resize = (out_h != vid.H || out_w != vid.W);
    Tensor<float> plane = resize ? Tensor<float>({vid.H, vid.W}) : Tensor<float>();
    Tensor<float> out_plane = resize ? Tensor<float>({out_h, out_w}) : Tensor<float>();
    const Affine1D ay{static_cast<double>(vid.H) / out_h,
                      0.5 * (static_cast<double>(vid.H) / out_h) - 0.5};
    const Affine1D ax{static_cast<double>(vid.W) / out_w,
                      0.5 * (static_cast<double>(vid.W) / out_w) - 0.5};

    for (int i = 0; i < num_frames; ++i) {
        const int t = start + i * skip;
        clip.frame_indices[static_cast<std::size_t>(i)] = t;
        for (int c = 0; c < vid.C; ++c) {
            if (!resize) {
                for (int y = 0; y < vid.H; ++y)
                    for (int x = 0; x < vid.W; ++x)
                        clip.pixels.at4(i, y, x, c) = vid.at(t, y, x, c) * (1.0f / 255.0f);
            } else {
                for (int y = 0; y < vid.H; ++y)
                    for (int x = 0; x < vid.W; ++x)
                        plane[static_cast<std::size_t>(y) * vid.W + x] =
                            vid.at(t, y, x, c) * (1.0f / 255.0f);
                resample_plane(plane.data(), vid.H, vid.W, out_plane.data(), out_h, out_w, ay,
                               ax, false);
                for (int y = 0; y < out_h; ++y)
                    for (int x = 0; x < out_w; ++x)
                        clip.pixels.at4(i, y, x, c) =
                            out_plane[static_cast<std::size_t>(y) * out_w + x];
            }
        }
    }
    return clip;
}

Tensor<float> clip_ground_truth(const Dataset& ds, const std::string& video_id,
                                const std::vector<int>& frame_indices, int out_h, int out_w) {
    const VideoU8& vid = ds.video(video_id);
    const VideoAnnotation& va = ds.annotation(video_id);
    const int T = static_cast<int>(frame_indices.size());
    Tensor<float> gt({T, out_h, out_w});
    const double sy = static_cast<double>(out_h) / vid.H;
    const double sx = static_cast<double>(out_w) / vid.W;
    for (int i = 0; i < T; ++i) {
        const int t = frame_indices[static_cast<std::size_t>(i)];
        if (ds.ann.mode == AnnotationMode::box) {
            auto it = va.boxes.find(t);
            if (it == va.boxes.end()) continue;
            const FrameBox& b = it->second;
            const int x1 = static_cast<int>(std::lround(b.x1 * sx));
            const int x2 = static_cast<int>(std::lround(b.x2 * sx));
            const int y1 = static_cast<int>(std::lround(b.y1 * sy));
            const int y2 = static_cast<int>(std::lround(b.y2 * sy));
            for (int y = std::max(0, y1); y < std::min(out_h, y2); ++y)
                for (int x = std::max(0, x1); x < std::min(out_w, x2); ++x)
                    gt.at3(i, y, x) = 1.0f;
        } else {
            auto it = va.masks.find(t);
            if (it == va.masks.end()) continue;
            VideoU8 m = read_clip_container(ds.root / it->second);
            for (int y = 0; y < out_h; ++y) {
                const int sy_i = std::min(m.H - 1, static_cast<int>(y / sy));
                for (int x = 0; x < out_w; ++x) {
                    const int sx_i = std::min(m.W - 1, static_cast<int>(x / sx));
                    gt.at3(i, y, x) = m.at(0, sy_i, sx_i, 0) >= 128 ? 1.0f : 0.0f;
                }
            }
        }
    }
    return gt;
}

}  // namespace stssl::dataio
