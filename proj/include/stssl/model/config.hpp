#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace stssl::model {

enum class HeadKind { dense, capsule2d };

inline const char* to_string(HeadKind h) { return h == HeadKind::dense ? "dense" : "capsule2d"; }
inline HeadKind head_from_string(const std::string& s) {
    if (s == "dense") return HeadKind::dense;
    if (s == "capsule2d") return HeadKind::capsule2d;
    throw std::invalid_argument("unknown head kind '" + s + "'");
}

struct CapsuleDims {
    int num_capsules = 5;   // K class capsules
    int capsule_dim = 16;   // output pose dimension
    int routing_iters = 3;
};

struct ModelConfig {
    std::vector<int> encoder_channels = {12, 24, 36};
    int temporal_kernel = 3;
    HeadKind head = HeadKind::capsule2d;
    CapsuleDims capsule;
    std::vector<int> decoder_channels = {24, 12, 6};
    int out_t = 8, out_h = 64, out_w = 64;  // output_size (T,H,W); T equals input T
    int in_channels = 3;
    int primary_types = 8;   // primary capsule types at each spatial cell
    int primary_dim = 8;     // primary capsule pose dimension
    int dense_hidden = 64;   // dense-head hidden width

    void validate() const {
        if (encoder_channels.empty()) throw std::invalid_argument("model: empty encoder");
        if (decoder_channels.size() != encoder_channels.size())
            throw std::invalid_argument("model: decoder stage count must match encoder");
        const int div = 1 << static_cast<int>(encoder_channels.size());
        if (out_h % div != 0 || out_w % div != 0)
            throw std::invalid_argument("model: spatial size must be divisible by 2^stages");
        if (temporal_kernel % 2 == 0) throw std::invalid_argument("model: even temporal kernel");
        if (capsule.routing_iters < 1)
            throw std::invalid_argument("model: routing_iters must be >= 1");
        if (out_t < 2) throw std::invalid_argument("model: need at least 2 frames");
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["encoder_channels"] = encoder_channels;
        j["temporal_kernel"] = temporal_kernel;
        j["head"] = std::string(to_string(head));
        j["capsule"] = {{"num_capsules", capsule.num_capsules},
                        {"capsule_dim", capsule.capsule_dim},
                        {"routing_iters", capsule.routing_iters}};
        j["decoder_channels"] = decoder_channels;
        j["output_size"] = {out_t, out_h, out_w};
        j["in_channels"] = in_channels;
        j["primary_types"] = primary_types;
        j["primary_dim"] = primary_dim;
        j["dense_hidden"] = dense_hidden;
        return j;
    }

    static ModelConfig from_json(const nlohmann::json& j) {
        ModelConfig c;
        c.encoder_channels = j.at("encoder_channels").get<std::vector<int>>();
        c.temporal_kernel = j.at("temporal_kernel").get<int>();
        c.head = head_from_string(j.at("head").get<std::string>());
        c.capsule.num_capsules = j.at("capsule").at("num_capsules").get<int>();
        c.capsule.capsule_dim = j.at("capsule").at("capsule_dim").get<int>();
        c.capsule.routing_iters = j.at("capsule").at("routing_iters").get<int>();
        c.decoder_channels = j.at("decoder_channels").get<std::vector<int>>();
        c.out_t = j.at("output_size")[0].get<int>();
        c.out_h = j.at("output_size")[1].get<int>();
        c.out_w = j.at("output_size")[2].get<int>();
        c.in_channels = j.at("in_channels").get<int>();
        c.primary_types = j.at("primary_types").get<int>();
        c.primary_dim = j.at("primary_dim").get<int>();
        c.dense_hidden = j.at("dense_hidden").get<int>();
        return c;
    }
};

}  // namespace stssl::model
