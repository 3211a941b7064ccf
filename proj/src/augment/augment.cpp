#include "stssl/augment/augment.hpp"

#include <algorithm>
#include <cmath>

namespace stssl::augment {

using nlohmann::json;

AugRecord sample_augmentation(Strength strength, Rng& rng) {
    AugRecord rec;
    rec.strength = strength;

    if (rng.bernoulli(0.5)) {
        Transform t;
        t.kind = TransformKind::hflip;
        rec.transforms.push_back(t);
    }
    {
        // Crop with area >= 0.8, aspect preserved in normalized coordinates.
        Transform t;
        t.kind = TransformKind::crop_resize;
        const double area = rng.uniform(0.8, 1.0);
        const double side = std::sqrt(area);
        t.x0 = rng.uniform(0.0, 1.0 - side);
        t.y0 = rng.uniform(0.0, 1.0 - side);
        t.x1 = t.x0 + side;
        t.y1 = t.y0 + side;
        rec.transforms.push_back(t);
    }
    if (strength == Strength::strong) {
        Transform t;
        t.kind = TransformKind::photometric;
        t.brightness = rng.uniform(-0.25, 0.25);
        t.contrast = rng.uniform(0.75, 1.25);
        t.saturation = rng.uniform(0.5, 1.5);
        rec.transforms.push_back(t);
        if (rng.bernoulli(0.5)) {
            Transform r;
            r.kind = TransformKind::temporal_reverse;
            rec.transforms.push_back(r);
        }
    }
    return rec;
}

dataio::Clip apply_to_clip(const dataio::Clip& clip, const AugRecord& record) {
    const int T = clip.frames(), H = clip.height(), W = clip.width(), C = clip.channels();
    dataio::Clip out = clip;

    Tensor<float> plane({H, W});
    Tensor<float> resampled({H, W});

    for (const auto& t : record.transforms) {
        switch (t.kind) {
            case TransformKind::hflip: {
                Tensor<float> next(out.pixels.shape());
                for (int f = 0; f < T; ++f)
                    for (int y = 0; y < H; ++y)
                        for (int x = 0; x < W; ++x)
                            for (int c = 0; c < C; ++c)
                                next.at4(f, y, x, c) = out.pixels.at4(f, y, W - 1 - x, c);
                out.pixels = std::move(next);
                break;
            }
            case TransformKind::crop_resize: {
                Affine1D ay, ax;
                crop_forward_affine(t, H, W, ay, ax);
                Tensor<float> next(out.pixels.shape());
                for (int f = 0; f < T; ++f) {
                    for (int c = 0; c < C; ++c) {
                        for (int y = 0; y < H; ++y)
                            for (int x = 0; x < W; ++x)
                                plane[static_cast<std::size_t>(y) * W + x] =
                                    out.pixels.at4(f, y, x, c);
                        resample_plane(plane.data(), H, W, resampled.data(), H, W, ay, ax,
                                       false);
                        for (int y = 0; y < H; ++y)
                            for (int x = 0; x < W; ++x)
                                next.at4(f, y, x, c) =
                                    resampled[static_cast<std::size_t>(y) * W + x];
                    }
                }
                out.pixels = std::move(next);
                break;
            }
            case TransformKind::photometric: {
                for (int f = 0; f < T; ++f)
                    for (int y = 0; y < H; ++y)
                        for (int x = 0; x < W; ++x) {
                            float gray = 0;
                            for (int c = 0; c < C; ++c) gray += out.pixels.at4(f, y, x, c);
                            gray /= static_cast<float>(C);
                            for (int c = 0; c < C; ++c) {
                                float v = out.pixels.at4(f, y, x, c);
                                v = gray + (v - gray) * static_cast<float>(t.saturation);
                                v = (v - 0.5f) * static_cast<float>(t.contrast) + 0.5f;
                                v += static_cast<float>(t.brightness);
                                out.pixels.at4(f, y, x, c) = std::clamp(v, 0.0f, 1.0f);
                            }
                        }
                break;
            }
            case TransformKind::temporal_reverse: {
                Tensor<float> next(out.pixels.shape());
                const std::size_t fsz = static_cast<std::size_t>(H) * W * C;
                for (int f = 0; f < T; ++f)
                    std::copy(out.pixels.data() + static_cast<std::size_t>(f) * fsz,
                              out.pixels.data() + static_cast<std::size_t>(f + 1) * fsz,
                              next.data() + static_cast<std::size_t>(T - 1 - f) * fsz);
                out.pixels = std::move(next);
                break;
            }
        }
    }
    return out;
}

json record_to_json(const AugRecord& record) {
    json j;
    j["strength"] = record.strength == Strength::weak ? "weak" : "strong";
    j["transforms"] = json::array();
    for (const auto& t : record.transforms) {
        json jt;
        switch (t.kind) {
            case TransformKind::hflip:
                jt["kind"] = "hflip";
                break;
            case TransformKind::crop_resize:
                jt["kind"] = "crop-resize";
                jt["params"] = {t.x0, t.y0, t.x1, t.y1};
                break;
            case TransformKind::photometric:
                jt["kind"] = "photometric";
                jt["params"] = {t.brightness, t.contrast, t.saturation};
                break;
            case TransformKind::temporal_reverse:
                jt["kind"] = "temporal-reverse";
                break;
        }
        j["transforms"].push_back(jt);
    }
    return j;
}

AugRecord record_from_json(const json& j) {
    AugRecord rec;
    rec.strength = j.at("strength").get<std::string>() == "strong" ? Strength::strong
                                                                   : Strength::weak;
    for (const auto& jt : j.at("transforms")) {
        Transform t;
        const std::string kind = jt.at("kind").get<std::string>();
        if (kind == "hflip") {
            t.kind = TransformKind::hflip;
        } else if (kind == "crop-resize") {
            t.kind = TransformKind::crop_resize;
            const auto p = jt.at("params");
            t.x0 = p[0];
            t.y0 = p[1];
            t.x1 = p[2];
            t.y1 = p[3];
        } else if (kind == "photometric") {
            t.kind = TransformKind::photometric;
            const auto p = jt.at("params");
            t.brightness = p[0];
            t.contrast = p[1];
            t.saturation = p[2];
        } else if (kind == "temporal-reverse") {
            t.kind = TransformKind::temporal_reverse;
        } else {
            throw std::invalid_argument("unknown transform kind: " + kind);
        }
        rec.transforms.push_back(t);
    }
    return rec;
}

}  // namespace stssl::augment
