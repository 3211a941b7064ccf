#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>

#include "stssl/core/io.hpp"
#include "stssl/dataio/container.hpp"
#include "stssl/dataio/dataset.hpp"
#include "stssl/dataio/sampler.hpp"
#include "stssl/dataio/synth.hpp"

using namespace stssl;
using namespace stssl::dataio;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("stssl_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::map<std::string, std::uint64_t> hash_tree(const fs::path& root) {
    std::map<std::string, std::uint64_t> hashes;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file())
            hashes[fs::relative(e.path(), root).string()] = hash_file(e.path());
    return hashes;
}

}  // namespace

TEST_CASE("clip container round-trips bit-exactly") {
    const auto dir = temp_dir("container");
    VideoU8 v;
    v.T = 3;
    v.H = 4;
    v.W = 5;
    v.C = 3;
    Rng rng(3);
    v.pix.resize(3 * 4 * 5 * 3);
    for (auto& p : v.pix) p = static_cast<std::uint8_t>(rng.uniform_int(256));
    write_clip_container(dir / "a.stv", v);
    const auto r = read_clip_container(dir / "a.stv");
    CHECK(r.T == 3);
    CHECK(r.H == 4);
    CHECK(r.W == 5);
    CHECK(r.C == 3);
    CHECK(r.pix == v.pix);
}

TEST_CASE("generator is bit-reproducible and re-loadable") {
    SynthConfig cfg;
    cfg.num_videos = 4;
    cfg.classes = 2;
    cfg.frames_per_video = 16;
    cfg.seed = 7;
    cfg.val_fraction = 0.0;
    const auto d1 = temp_dir("gen1");
    const auto d2 = temp_dir("gen2");
    const auto s1 = generate_synthetic_dataset(cfg, d1);
    const auto s2 = generate_synthetic_dataset(cfg, d2);
    CHECK(s1.num_videos == 4);
    CHECK(hash_tree(d1) == hash_tree(d2));

    const auto ds = load_dataset(d1);
    CHECK(ds.ann.videos.size() == 4);
    CHECK(ds.class_count() == 2);
    CHECK(ds.train_ids.size() == 4);
    // Round-trip: loaded pixels match the container bytes exactly.
    const auto raw = read_clip_container(d1 / (ds.ann.videos[0].id + ".stv"));
    CHECK(ds.video(ds.ann.videos[0].id).pix == raw.pix);
}

TEST_CASE("different seeds give different datasets") {
    SynthConfig cfg;
    cfg.num_videos = 2;
    cfg.classes = 2;
    cfg.seed = 1;
    const auto d1 = temp_dir("seed1");
    generate_synthetic_dataset(cfg, d1);
    cfg.seed = 2;
    const auto d2 = temp_dir("seed2");
    generate_synthetic_dataset(cfg, d2);
    CHECK(hash_tree(d1) != hash_tree(d2));
}

TEST_CASE("translate-right motion shifts the box by the velocity") {
    MotionParams p;
    p.kind = MotionKind::translate_right;
    p.x0 = 14.0;
    p.y0 = 20.0;
    p.vx = 2.0;
    double cx0, cy0, cx1, cy1;
    motion_center(p, 0, cx0, cy0);
    motion_center(p, 1, cx1, cy1);
    CHECK(cx1 - cx0 == doctest::Approx(2.0));
    CHECK(cy1 == cy0);

    // Rasterized square box shifts by exactly the integer velocity.
    ShapeSpec s;
    s.kind = ShapeKind::square;
    s.size = 8.0;
    auto box_x1 = [&](double cx) {
        for (int x = 0; x < 64; ++x)
            if (shape_contains(s, cx, 20.0, x + 0.5, 20.0 + 0.5)) return x;
        return -1;
    };
    const int x1_f0 = box_x1(cx0);
    const int x1_f1 = box_x1(cx1);
    CHECK(x1_f0 == 10);  // center 14, half-size 4
    CHECK(x1_f1 == 12);
}

TEST_CASE("oversized shapes are rejected with a diagnostic") {
    SynthConfig cfg;
    cfg.num_videos = 1;
    cfg.classes = 2;
    cfg.height = 16;
    cfg.width = 16;
    cfg.shape_min = 14;
    cfg.shape_max = 20;
    const auto dir = temp_dir("oversize");
    CHECK_THROWS_WITH_AS(generate_synthetic_dataset(cfg, dir),
                         doctest::Contains("too large"), std::invalid_argument);
}

TEST_CASE("untrimmed videos lack annotations exactly on the action-free span") {
    SynthConfig cfg;
    cfg.num_videos = 8;
    cfg.classes = 2;
    cfg.frames_per_video = 16;
    cfg.untrimmed_fraction = 0.5;
    cfg.seed = 13;
    cfg.val_fraction = 0.0;
    const auto dir = temp_dir("untrimmed");
    const auto s = generate_synthetic_dataset(cfg, dir);
    CHECK(s.untrimmed == 4);

    const auto ds = load_dataset(dir);
    const auto meta = read_json_file(dir / "genmeta.json");
    int untrimmed_seen = 0;
    for (const auto& jv : meta.at("videos")) {
        const std::string id = jv.at("id").get<std::string>();
        const int a = jv.at("action_start").get<int>();
        const int b = jv.at("action_end").get<int>();
        const auto& ann = ds.annotation(id);
        CHECK(static_cast<int>(ann.boxes.size()) == b - a);
        for (int t = 0; t < 16; ++t) CHECK(ann.has_frame(t) == (t >= a && t < b));
        if (b - a < 16) {
            ++untrimmed_seen;
            CHECK_FALSE(ann.trimmed);
        }
    }
    CHECK(untrimmed_seen == 4);
}

TEST_CASE("load_dataset rejects malformed annotations naming the record") {
    SynthConfig cfg;
    cfg.num_videos = 2;
    cfg.classes = 2;
    cfg.seed = 3;
    const auto dir = temp_dir("badload");
    generate_synthetic_dataset(cfg, dir);

    auto ann = read_json_file(dir / "annotations.json");
    SUBCASE("degenerate box") {
        ann["videos"][0]["frames"]["0"] = {10, 10, 5, 20};
        write_json_file(dir / "annotations.json", ann);
        CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("video_0000"),
                             std::runtime_error);
    }
    SUBCASE("duplicate video id") {
        ann["videos"][1]["id"] = ann["videos"][0]["id"];
        write_json_file(dir / "annotations.json", ann);
        CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("duplicate"),
                             std::runtime_error);
    }
    SUBCASE("missing container") {
        fs::remove(dir / "video_0001.stv");
        CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("missing container"),
                             std::runtime_error);
    }
}

TEST_CASE("stratified split matches the rounding rule and is deterministic") {
    SynthConfig cfg;
    cfg.num_videos = 100;
    cfg.classes = 5;
    cfg.frames_per_video = 8;
    cfg.height = 32;
    cfg.width = 32;
    cfg.shape_min = 8;
    cfg.shape_max = 12;
    cfg.seed = 17;
    cfg.val_fraction = 0.0;
    const auto dir = temp_dir("split");
    generate_synthetic_dataset(cfg, dir);
    const auto ds = load_dataset(dir);

    const auto s1 = split_labeled(ds, 0.2, 42);
    const auto s2 = split_labeled(ds, 0.2, 42);
    CHECK(s1.labeled_ids == s2.labeled_ids);
    CHECK(s1.unlabeled_ids == s2.unlabeled_ids);
    CHECK(s1.labeled_ids.size() == 20);
    CHECK(s1.unlabeled_ids.size() == 80);

    std::map<int, int> per_class;
    for (const auto& id : s1.labeled_ids) per_class[ds.annotation(id).class_id]++;
    for (const auto& [cls, n] : per_class) CHECK(n == 4);

    // Labeled and unlabeled sets are disjoint.
    std::set<std::string> lab(s1.labeled_ids.begin(), s1.labeled_ids.end());
    for (const auto& id : s1.unlabeled_ids) CHECK(lab.count(id) == 0);

    const auto full = split_labeled(ds, 1.0, 0);
    CHECK(full.unlabeled_ids.empty());

    CHECK_THROWS(split_labeled(ds, 0.001, 0));  // zero labeled in every class
}

TEST_CASE("extract_clip follows start/skip and validates bounds") {
    SynthConfig cfg;
    cfg.num_videos = 1;
    cfg.classes = 2;
    cfg.frames_per_video = 16;
    cfg.seed = 5;
    cfg.val_fraction = 0.0;
    const auto dir = temp_dir("clip");
    generate_synthetic_dataset(cfg, dir);
    const auto ds = load_dataset(dir);
    const auto& id = ds.train_ids[0];

    const auto c = extract_clip(ds, id, 0, 8, 2);
    CHECK(c.frame_indices == std::vector<int>{0, 2, 4, 6, 8, 10, 12, 14});
    CHECK(c.frames() == 8);
    for (std::size_t i = 0; i < c.pixels.size(); ++i) {
        CHECK(c.pixels[i] >= 0.0f);
        CHECK(c.pixels[i] <= 1.0f);
    }

    const auto c2 = extract_clip(ds, id, 3, 2, 1);
    CHECK(c2.frame_indices == std::vector<int>{3, 4});

    CHECK_THROWS_AS(extract_clip(ds, id, 2, 8, 2), std::out_of_range);  // needs start+14 < 16
    CHECK(valid_clip_starts(10, 8, 2) <= 0);
}

TEST_CASE("mixed batches keep the 1:1 ratio and cycle the labeled set evenly") {
    SynthConfig cfg;
    cfg.num_videos = 20;
    cfg.classes = 2;
    cfg.frames_per_video = 16;
    cfg.seed = 23;
    cfg.val_fraction = 0.0;
    const auto dir = temp_dir("sampler");
    generate_synthetic_dataset(cfg, dir);
    const auto ds = load_dataset(dir);
    const auto split = split_labeled(ds, 0.5, 3);  // 10 labeled / 10 unlabeled

    MixedBatchSampler sampler(Rng(11));
    SamplerConfig sc;
    sc.batch_size = 8;
    sc.frames = 8;
    sc.skip = 2;
    sc.out_h = 64;
    sc.out_w = 64;

    std::map<std::string, int> seen;
    const int steps = 10;  // 10 steps x 4 labeled = 40 draws over 10 labeled ids
    for (int s = 0; s < steps; ++s) {
        const auto b = sampler.next(ds, split, sc);
        CHECK(b.items.size() == 8);
        CHECK(b.labeled_count() == 4);
        CHECK(b.unlabeled_count() == 4);
        for (const auto& it : b.items) {
            if (it.labeled) {
                seen[it.clip.video_id]++;
                CHECK(it.gt.size() == 8u * 64 * 64);
                CHECK(it.class_id >= 0);
            }
        }
    }
    // ceil(steps*B/2 / N_l) = 4: every labeled id appears 4 +- 1 times.
    for (const auto& id : split.labeled_ids) {
        CHECK(seen[id] >= 3);
        CHECK(seen[id] <= 5);
    }

    SUBCASE("supervised mode draws all-labeled batches") {
        sc.supervised = true;
        sc.batch_size = 2;
        const auto b = sampler.next(ds, split, sc);
        CHECK(b.items.size() == 2);
        CHECK(b.labeled_count() == 2);
    }
    SUBCASE("semi mode with empty unlabeled set directs to supervised mode") {
        SplitIndex empty = split;
        empty.unlabeled_ids.clear();
        CHECK_THROWS_WITH_AS(sampler.next(ds, empty, sc), doctest::Contains("supervised"),
                             std::runtime_error);
    }
}

TEST_CASE("sampler state round-trips through JSON") {
    SynthConfig cfg;
    cfg.num_videos = 6;
    cfg.classes = 2;
    cfg.frames_per_video = 16;
    cfg.seed = 29;
    cfg.val_fraction = 0.0;
    const auto dir = temp_dir("samplerstate");
    generate_synthetic_dataset(cfg, dir);
    const auto ds = load_dataset(dir);
    const auto split = split_labeled(ds, 0.5, 1);

    SamplerConfig sc;
    sc.batch_size = 4;
    MixedBatchSampler a(Rng(2));
    a.next(ds, split, sc);
    const auto st = a.state();

    MixedBatchSampler b(Rng(99));
    b.restore(st);
    // Both samplers now produce identical draw sequences.
    for (int i = 0; i < 3; ++i) {
        auto ba = a.next(ds, split, sc);
        auto bb = b.next(ds, split, sc);
        for (std::size_t k = 0; k < ba.items.size(); ++k) {
            CHECK(ba.items[k].clip.video_id == bb.items[k].clip.video_id);
            CHECK(ba.items[k].clip.frame_indices == bb.items[k].clip.frame_indices);
        }
    }
}

TEST_CASE("mask mode stores per-frame mask containers") {
    SynthConfig cfg;
    cfg.num_videos = 2;
    cfg.classes = 2;
    cfg.frames_per_video = 8;
    cfg.mode = AnnotationMode::mask;
    cfg.seed = 31;
    cfg.val_fraction = 0.0;
    const auto dir = temp_dir("maskmode");
    generate_synthetic_dataset(cfg, dir);
    const auto ds = load_dataset(dir);
    CHECK(ds.ann.mode == AnnotationMode::mask);
    const auto& va = ds.ann.videos[0];
    CHECK(va.masks.size() == 8);
    const auto gt = clip_ground_truth(ds, va.id, {0, 1, 2}, 64, 64);
    double s = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) s += gt[i];
    CHECK(s > 0);  // the shape is somewhere
}
