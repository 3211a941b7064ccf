#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stssl/augment/augment.hpp"

using namespace stssl;
using namespace stssl::augment;

namespace {

dataio::Clip make_clip(int T, int H, int W, int C, float fill) {
    dataio::Clip c;
    c.video_id = "v";
    c.pixels = Tensor<float>({T, H, W, C}, fill);
    for (int t = 0; t < T; ++t) c.frame_indices.push_back(t);
    return c;
}

Transform crop(double x0, double y0, double x1, double y1) {
    Transform t;
    t.kind = TransformKind::crop_resize;
    t.x0 = x0;
    t.y0 = y0;
    t.x1 = x1;
    t.y1 = y1;
    return t;
}

Transform hflip() {
    Transform t;
    t.kind = TransformKind::hflip;
    return t;
}

Transform treverse() {
    Transform t;
    t.kind = TransformKind::temporal_reverse;
    return t;
}

}  // namespace

TEST_CASE("double hflip is the identity on clips") {
    auto clip = make_clip(2, 4, 6, 3, 0.0f);
    Rng rng(1);
    for (std::size_t i = 0; i < clip.pixels.size(); ++i)
        clip.pixels[i] = static_cast<float>(rng.uniform());
    AugRecord rec;
    rec.transforms = {hflip(), hflip()};
    const auto out = apply_to_clip(clip, rec);
    for (std::size_t i = 0; i < clip.pixels.size(); ++i)
        CHECK(out.pixels[i] == clip.pixels[i]);
}

TEST_CASE("full-frame crop is the identity") {
    auto clip = make_clip(2, 8, 8, 1, 0.0f);
    Rng rng(2);
    for (std::size_t i = 0; i < clip.pixels.size(); ++i)
        clip.pixels[i] = static_cast<float>(rng.uniform());
    AugRecord rec;
    rec.transforms = {crop(0, 0, 1, 1)};
    const auto out = apply_to_clip(clip, rec);
    for (std::size_t i = 0; i < clip.pixels.size(); ++i)
        CHECK(out.pixels[i] == clip.pixels[i]);
}

TEST_CASE("crop then resize keeps the spatial size") {
    auto clip = make_clip(2, 16, 16, 3, 0.3f);
    AugRecord rec;
    rec.transforms = {crop(0.25, 0.25, 0.75, 0.75)};
    const auto out = apply_to_clip(clip, rec);
    CHECK(out.pixels.shape() == clip.pixels.shape());
}

TEST_CASE("brightness saturates at 1") {
    auto clip = make_clip(2, 4, 4, 3, 0.8f);
    Transform photo;
    photo.kind = TransformKind::photometric;
    photo.brightness = 0.5;
    AugRecord rec;
    rec.transforms = {photo};
    const auto out = apply_to_clip(clip, rec);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) CHECK(out.pixels[i] == 1.0f);
}

TEST_CASE("weak draws flip with probability near one half") {
    Rng rng(123);
    int flips = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto rec = sample_augmentation(Strength::weak, rng);
        bool has_flip = false, has_photo = false, has_rev = false;
        double area = 1.0;
        for (const auto& t : rec.transforms) {
            if (t.kind == TransformKind::hflip) has_flip = true;
            if (t.kind == TransformKind::photometric) has_photo = true;
            if (t.kind == TransformKind::temporal_reverse) has_rev = true;
            if (t.kind == TransformKind::crop_resize) area = (t.x1 - t.x0) * (t.y1 - t.y0);
        }
        flips += has_flip ? 1 : 0;
        CHECK(area >= 0.8 - 1e-12);
        CHECK_FALSE(has_photo);
        CHECK_FALSE(has_rev);
    }
    CHECK(flips >= 4500);
    CHECK(flips <= 5500);
}

TEST_CASE("strong draws may include temporal reverse and photometric") {
    Rng rng(7);
    bool saw_rev = false, saw_photo = false;
    for (int i = 0; i < 100; ++i) {
        const auto rec = sample_augmentation(Strength::strong, rng);
        for (const auto& t : rec.transforms) {
            if (t.kind == TransformKind::temporal_reverse) saw_rev = true;
            if (t.kind == TransformKind::photometric) saw_photo = true;
        }
    }
    CHECK(saw_rev);
    CHECK(saw_photo);
}

TEST_CASE("flip inversion moves an active pixel to the mirrored column") {
    Tensor<double> loc({1, 4, 8});
    loc.at3(0, 2, 3) = 1.0;
    AugRecord rec;
    rec.transforms = {hflip()};
    const auto inv = invert_on_localization(loc, rec);
    CHECK(inv.at3(0, 2, 8 - 1 - 3) == 1.0);
    double sum = 0;
    for (std::size_t i = 0; i < inv.size(); ++i) sum += inv[i];
    CHECK(sum == 1.0);
}

TEST_CASE("temporal-reverse inversion restores frame order") {
    Tensor<double> loc({3, 1, 1});
    loc[0] = 0.1;
    loc[1] = 0.5;
    loc[2] = 0.9;
    AugRecord rec;
    rec.transforms = {treverse()};
    const auto inv = invert_on_localization(loc, rec);
    CHECK(inv[0] == 0.9);
    CHECK(inv[1] == 0.5);
    CHECK(inv[2] == 0.1);
}

TEST_CASE("crop inversion places mass in the crop region and zeros elsewhere") {
    // Uniform ones on the augmented grid; inverse of a top-left quarter crop
    // must put ones exactly inside the quadrant, zero outside.
    const int H = 16, W = 16;
    Tensor<double> loc({1, H, W}, 1.0);
    AugRecord rec;
    rec.transforms = {crop(0.0, 0.0, 0.5, 0.5)};
    const auto inv = invert_on_localization(loc, rec);
    const auto valid = validity_mask(rec, 1, H, W);

    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            // Coordinate-grid oracle: original pixel (x,y) maps into the
            // augmented frame iff its normalized position lies in the crop.
            const double sx = (x + 0.5 - 0.0 * W) / 0.5 - 0.5;
            const double sy = (y + 0.5 - 0.0 * H) / 0.5 - 0.5;
            const bool inside = sx >= 0 && sx <= W - 1 && sy >= 0 && sy <= H - 1;
            CHECK(static_cast<bool>(valid.at3(0, y, x)) == inside);
            if (inside) CHECK(inv.at3(0, y, x) == doctest::Approx(1.0).epsilon(1e-6));
            else CHECK(inv.at3(0, y, x) == 0.0);
        }
}

TEST_CASE("inversion fidelity on block-constant maps") {
    // 1000 randomized records. Flip/reverse-only records must invert exactly.
    // Crop records double-resample, so the error is measured where bilinear
    // interpolation is well-posed: pixels whose resampling support stays
    // inside one constant block (a 2.5 px margin from block edges); right at a
    // block step any bilinear scheme blends neighboring blocks.
    Rng rng(77);
    const int H = 32, W = 32, T = 4, BS = 16;
    int crop_records = 0;
    for (int iter = 0; iter < 1000; ++iter) {
        Tensor<double> loc({T, H, W});
        for (int t = 0; t < T; ++t)
            for (int by = 0; by < H / BS; ++by)
                for (int bx = 0; bx < W / BS; ++bx) {
                    const double v = rng.uniform();
                    for (int y = by * BS; y < by * BS + BS; ++y)
                        for (int x = bx * BS; x < bx * BS + BS; ++x) loc.at3(t, y, x) = v;
                }

        AugRecord rec;
        const bool with_crop = rng.bernoulli(0.5);
        if (rng.bernoulli(0.5)) rec.transforms.push_back(hflip());
        if (with_crop) {
            // Crop aligned loosely; area >= 0.64 keeps blocks legible.
            const double side = std::sqrt(rng.uniform(0.8, 1.0));
            const double x0 = rng.uniform(0.0, 1.0 - side);
            const double y0 = rng.uniform(0.0, 1.0 - side);
            rec.transforms.push_back(crop(x0, y0, x0 + side, y0 + side));
            ++crop_records;
        }
        if (rng.bernoulli(0.5)) rec.transforms.push_back(treverse());

        // Push the map through the forward transforms (as if the model had
        // produced it on the augmented view), then invert.
        Tensor<double> fwd = loc;
        for (const auto& t : rec.transforms) {
            if (t.kind == TransformKind::hflip) fwd = augment::detail::flip_x_tensor(fwd);
            else if (t.kind == TransformKind::temporal_reverse)
                fwd = augment::detail::reverse_time_tensor(fwd);
            else if (t.kind == TransformKind::crop_resize) {
                Affine1D ay, ax;
                crop_forward_affine(t, H, W, ay, ax);
                Tensor<double> out(fwd.shape());
                for (int f = 0; f < T; ++f)
                    resample_plane(fwd.data() + static_cast<std::size_t>(f) * H * W, H, W,
                                   out.data() + static_cast<std::size_t>(f) * H * W, H, W, ay,
                                   ax, false);
                fwd = std::move(out);
            }
        }
        const auto inv = invert_on_localization(fwd, rec);
        const auto valid = validity_mask(rec, T, H, W);

        auto block_interior = [&](int y, int x) {
            const double m = 2.5;
            const double ry = std::fmod(y + 0.5, BS), rx = std::fmod(x + 0.5, BS);
            return ry >= m && ry <= BS - m && rx >= m && rx <= BS - m;
        };
        double max_err = 0;
        for (int t = 0; t < T; ++t)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    if (!valid.at3(t, y, x)) continue;
                    if (with_crop && !block_interior(y, x)) continue;
                    max_err = std::max(max_err, std::abs(inv.at3(t, y, x) - loc.at3(t, y, x)));
                }
        if (with_crop) {
            CHECK(max_err <= 1e-3);
        } else {
            CHECK(max_err == 0.0);  // flips and reversals invert exactly
        }
    }
    CHECK(crop_records > 300);
}

TEST_CASE("cyclic sequence layout and length") {
    const int n = 3, H = 1, W = 1;
    Tensor<double> o({n, H, W});
    Tensor<double> g({n, H, W});
    o[0] = 1;
    o[1] = 2;
    o[2] = 3;
    g[0] = 10;
    g[1] = 20;
    g[2] = 30;
    const auto cyc = build_cyclic_sequence(o, g);
    CHECK(cyc.dim(0) == 4);  // 2n-2
    CHECK(cyc[0] == 1);
    CHECK(cyc[1] == 2);
    CHECK(cyc[2] == 3);
    CHECK(cyc[3] == 20);  // g_2: flipped augmented view without its seam frames

    Tensor<double> o8({8, 1, 1});
    const auto cyc8 = build_cyclic_sequence(o8, o8);
    CHECK(cyc8.dim(0) == 14);
}

TEST_CASE("records serialize to JSON and back") {
    Rng rng(5);
    const auto rec = sample_augmentation(Strength::strong, rng);
    const auto j = record_to_json(rec);
    const auto back = record_from_json(j);
    REQUIRE(back.transforms.size() == rec.transforms.size());
    for (std::size_t i = 0; i < rec.transforms.size(); ++i) {
        CHECK(back.transforms[i].kind == rec.transforms[i].kind);
        CHECK(back.transforms[i].x0 == rec.transforms[i].x0);
        CHECK(back.transforms[i].brightness == rec.transforms[i].brightness);
    }
}

TEST_CASE("pixel range stays in [0,1] for random records") {
    Rng rng(9);
    auto clip = make_clip(4, 16, 16, 3, 0.0f);
    for (std::size_t i = 0; i < clip.pixels.size(); ++i)
        clip.pixels[i] = static_cast<float>(rng.uniform());
    for (int i = 0; i < 50; ++i) {
        const auto rec = sample_augmentation(Strength::strong, rng);
        const auto out = apply_to_clip(clip, rec);
        for (std::size_t k = 0; k < out.pixels.size(); ++k) {
            CHECK(out.pixels[k] >= 0.0f);
            CHECK(out.pixels[k] <= 1.0f);
        }
    }
}

TEST_CASE("degenerate crop is rejected") {
    auto clip = make_clip(2, 8, 8, 1, 0.5f);
    AugRecord rec;
    rec.transforms = {crop(0.3, 0.3, 0.3, 0.8)};
    CHECK_THROWS_AS(apply_to_clip(clip, rec), std::invalid_argument);
}
