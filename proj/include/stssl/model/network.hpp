#pragma once

#include <map>
#include <string>

#include "stssl/autograd/autograd.hpp"
#include "stssl/core/rng.hpp"
#include "stssl/dataio/types.hpp"
#include "stssl/model/config.hpp"

namespace stssl::model {

/// Named, stably-ordered parameter tensors.
template <typename T>
struct ParamSet {
    std::vector<std::string> names;
    std::vector<Tensor<T>> values;

    int add(const std::string& name, std::vector<int> shape) {
        names.push_back(name);
        values.emplace_back(std::move(shape));
        return static_cast<int>(values.size()) - 1;
    }
    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        throw std::out_of_range("no such parameter: " + name);
    }
    std::size_t total_elements() const {
        std::size_t n = 0;
        for (const auto& v : values) n += v.size();
        return n;
    }
    template <typename U>
    ParamSet<U> cast() const {
        ParamSet<U> out;
        out.names = names;
        for (const auto& v : values) out.values.push_back(v.template cast<U>());
        return out;
    }
};

template <typename T>
struct ForwardOut {
    typename autograd::Graph<T>::Var class_scores;  // [K]
    typename autograd::Graph<T>::Var penultimate;   // [D]
    typename autograd::Graph<T>::Var loc;           // [T,H,W]
};

/// Converts a THWC clip to the channel-major layout the network consumes.
template <typename T>
Tensor<T> clip_to_chw(const dataio::Clip& clip) {
    const int Tt = clip.frames(), H = clip.height(), W = clip.width(), C = clip.channels();
    Tensor<T> out({C, Tt, H, W});
    for (int t = 0; t < Tt; ++t)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                for (int c = 0; c < C; ++c)
                    out.at4(c, t, y, x) = static_cast<T>(clip.pixels.at4(t, y, x, c));
    return out;
}

/// The detection network M(v) -> (class scores, penultimate features,
/// localization map). A small spatio-temporal conv encoder, a classifier head
/// (dense or 2-d capsule routing on the temporally pooled top features), and
/// a skip-connected upsampling decoder with a sigmoid pixel head.
template <typename T>
class Network {
public:
    explicit Network(ModelConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        build_param_specs();
    }

    const ModelConfig& config() const { return cfg_; }
    const std::vector<std::string>& param_names() const { return spec_names_; }
    const std::vector<std::vector<int>>& param_shapes() const { return spec_shapes_; }

    /// Deterministic fan-based uniform initialization (bias zero; the output
    /// head bias starts low so early maps favor background).
    ParamSet<T> init_params(std::uint64_t seed) const {
        ParamSet<T> ps;
        Rng root(seed);
        for (std::size_t i = 0; i < spec_names_.size(); ++i) {
            const int idx = ps.add(spec_names_[i], spec_shapes_[i]);
            Tensor<T>& t = ps.values[static_cast<std::size_t>(idx)];
            const auto& name = spec_names_[i];
            if (name.size() > 2 && name.substr(name.size() - 2) == ".b") {
                if (name == "dec.out.b") t.fill(T(-2));
                continue;
            }
            Rng rng = root.split(name);
            const double bound = init_bound(spec_shapes_[i]);
            for (std::size_t k = 0; k < t.size(); ++k)
                t[k] = static_cast<T>(rng.uniform(-bound, bound));
        }
        return ps;
    }

    static double init_bound(const std::vector<int>& shape) {
        // Kaiming-uniform style: sqrt(6 / fan_in), fan_in = prod(shape[1:]).
        double fan_in = 1;
        for (std::size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
        if (shape.size() == 1) fan_in = shape[0];
        return std::sqrt(6.0 / std::max(1.0, fan_in));
    }

    ForwardOut<T> forward(autograd::Graph<T>& g,
                          const std::vector<typename autograd::Graph<T>::Var>& params,
                          typename autograd::Graph<T>::Var clip) const {
        namespace ops = autograd::ops;
        using Var = typename autograd::Graph<T>::Var;
        if (params.size() != spec_names_.size())
            throw std::invalid_argument("forward: wrong parameter count");
        auto P = [&](const std::string& name) -> Var {
            return params[static_cast<std::size_t>(pindex_.at(name))];
        };

        const int kt = cfg_.temporal_kernel;
        const int stages = static_cast<int>(cfg_.encoder_channels.size());

        // Encoder.
        std::vector<Var> enc;
        Var h = clip;
        for (int i = 0; i < stages; ++i) {
            h = ops::conv3d(g, h, P("enc" + std::to_string(i) + ".w"),
                            P("enc" + std::to_string(i) + ".b"), 1, 2, 2);
            h = ops::silu(g, h);
            enc.push_back(h);
        }

        // Classifier head on temporally pooled top features.
        Var pooled = ops::mean_over_t(g, h);
        Var scores = nullptr, penult = nullptr;
        if (cfg_.head == HeadKind::capsule2d) {
            Var prim = ops::conv3d(g, pooled, P("caps.prim.w"), P("caps.prim.b"), 1, 1, 1);
            Var u = ops::caps_arrange(g, prim, cfg_.primary_types, cfg_.primary_dim);
            u = ops::caps_squash_rows(g, u);
            Var uhat = ops::caps_predict(g, u, P("caps.w"));
            const int N = u->value.dim(0) * cfg_.primary_types;
            const int K = cfg_.capsule.num_capsules;
            Var b = g.constant(Tensor<T>({N, K}));
            Var v = nullptr;
            for (int r = 0; r < cfg_.capsule.routing_iters; ++r) {
                Var c = ops::caps_softmax_rows(g, b);
                Var s = ops::caps_mix(g, c, uhat);
                v = ops::caps_squash_rows(g, s);
                if (r + 1 < cfg_.capsule.routing_iters)
                    b = ops::add(g, b, ops::caps_agree(g, uhat, v));
            }
            scores = ops::caps_norm_rows(g, v);
            penult = ops::reshape(g, v, {K * cfg_.capsule.capsule_dim});
        } else {
            const auto& ps = pooled->value.shape();
            Var flat = ops::reshape(g, pooled, {ps[0] * ps[2] * ps[3]});
            Var hid = ops::silu(g, ops::dense(g, flat, P("head.fc1.w"), P("head.fc1.b")));
            scores = ops::sigmoid(g, ops::dense(g, hid, P("head.fc2.w"), P("head.fc2.b")));
            penult = hid;
        }

        // Decoder with skip connections.
        Var d = h;
        for (int j = 0; j < stages; ++j) {
            d = ops::upsample2x_hw(g, d);
            const int skip = stages - 2 - j;
            if (skip >= 0) d = ops::concat_c(g, d, enc[static_cast<std::size_t>(skip)]);
            d = ops::conv3d(g, d, P("dec" + std::to_string(j) + ".w"),
                            P("dec" + std::to_string(j) + ".b"), 1, 1, 1);
            d = ops::silu(g, d);
        }
        Var logits = ops::conv3d(g, d, P("dec.out.w"), P("dec.out.b"), 1, 1, 1);
        Var loc = ops::sigmoid(g, logits);
        const auto& ls = loc->value.shape();
        loc = ops::reshape(g, loc, {ls[1], ls[2], ls[3]});

        return {scores, penult, loc};
    }

private:
    void build_param_specs() {
        auto add = [&](const std::string& n, std::vector<int> s) {
            pindex_[n] = static_cast<int>(spec_names_.size());
            spec_names_.push_back(n);
            spec_shapes_.push_back(std::move(s));
        };
        const int kt = cfg_.temporal_kernel;
        int cin = cfg_.in_channels;
        for (std::size_t i = 0; i < cfg_.encoder_channels.size(); ++i) {
            const int cout = cfg_.encoder_channels[i];
            add("enc" + std::to_string(i) + ".w", {cout, cin, kt, 3, 3});
            add("enc" + std::to_string(i) + ".b", {cout});
            cin = cout;
        }
        const int top = cfg_.encoder_channels.back();
        if (cfg_.head == HeadKind::capsule2d) {
            const int prim_ch = cfg_.primary_types * cfg_.primary_dim;
            add("caps.prim.w", {prim_ch, top, 1, 1, 1});
            add("caps.prim.b", {prim_ch});
            add("caps.w", {cfg_.primary_types, cfg_.capsule.num_capsules, cfg_.primary_dim,
                           cfg_.capsule.capsule_dim});
        } else {
            const int stages = static_cast<int>(cfg_.encoder_channels.size());
            const int hp = cfg_.out_h >> stages, wp = cfg_.out_w >> stages;
            add("head.fc1.w", {cfg_.dense_hidden, top * hp * wp});
            add("head.fc1.b", {cfg_.dense_hidden});
            add("head.fc2.w", {cfg_.capsule.num_capsules, cfg_.dense_hidden});
            add("head.fc2.b", {cfg_.capsule.num_capsules});
        }
        // Decoder: stage j consumes upsampled features (+ skip when present).
        int dcin = top;
        const int stages = static_cast<int>(cfg_.encoder_channels.size());
        for (int j = 0; j < stages; ++j) {
            const int skip = stages - 2 - j;
            int in_ch = dcin;
            if (skip >= 0) in_ch += cfg_.encoder_channels[static_cast<std::size_t>(skip)];
            const int out_ch = cfg_.decoder_channels[static_cast<std::size_t>(j)];
            const int ktj = (j == 0) ? kt : 1;
            add("dec" + std::to_string(j) + ".w", {out_ch, in_ch, ktj, 3, 3});
            add("dec" + std::to_string(j) + ".b", {out_ch});
            dcin = out_ch;
        }
        add("dec.out.w", {1, dcin, 1, 3, 3});
        add("dec.out.b", {1});
    }

    ModelConfig cfg_;
    std::vector<std::string> spec_names_;
    std::vector<std::vector<int>> spec_shapes_;
    std::map<std::string, int> pindex_;
};

}  // namespace stssl::model
