#include "stssl/trainer/config.hpp"

#include <stdexcept>

#include "stssl/core/io.hpp"

namespace stssl::trainer {

using nlohmann::json;

json TrainConfig::to_json() const {
    json j;
    j["mode"] = losses::to_string(mode);
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["frames"] = frames;
    j["skip"] = skip;
    j["resolution"] = resolution;
    j["lr"] = lr;
    j["lambda"] = lambda;
    j["lambda1"] = lambda1;
    j["lambda2"] = lambda2;
    j["coherence_window"] = coherence_window;
    j["ramp_length"] = ramp_length;
    j["w_max"] = w_max;
    j["plateau.decay_factor"] = plateau.decay_factor;
    j["plateau.patience"] = plateau.patience;
    j["labeled_fraction"] = labeled_fraction;
    j["seed"] = seed;
    j["strength"] = strength == augment::Strength::weak ? "weak" : "strong";
    j["both_variant"] = losses::to_string(both_variant);
    j["unlabeled_limit"] = unlabeled_limit;
    j["det_threshold"] = det_threshold;
    // Model keys, flat-dotted like everything else.
    const json m = model.to_json();
    for (auto it = m.begin(); it != m.end(); ++it) {
        if (it->is_object()) {
            for (auto jt = it->begin(); jt != it->end(); ++jt)
                j["model." + it.key() + "." + jt.key()] = jt.value();
        } else {
            j["model." + it.key()] = it.value();
        }
    }
    return j;
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    if (j.contains("mode")) c.mode = losses::mode_from_string(j.at("mode").get<std::string>());
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("frames", c.frames);
    get("skip", c.skip);
    get("resolution", c.resolution);
    get("lr", c.lr);
    get("lambda", c.lambda);
    get("lambda1", c.lambda1);
    get("lambda2", c.lambda2);
    get("coherence_window", c.coherence_window);
    get("ramp_length", c.ramp_length);
    get("w_max", c.w_max);
    get("plateau.decay_factor", c.plateau.decay_factor);
    get("plateau.patience", c.plateau.patience);
    get("labeled_fraction", c.labeled_fraction);
    get("seed", c.seed);
    if (j.contains("strength"))
        c.strength = j.at("strength").get<std::string>() == "weak" ? augment::Strength::weak
                                                                   : augment::Strength::strong;
    if (j.contains("both_variant"))
        c.both_variant = losses::mode_from_string(j.at("both_variant").get<std::string>());
    get("unlabeled_limit", c.unlabeled_limit);
    get("det_threshold", c.det_threshold);

    // Re-nest the model.* keys.
    json m = c.model.to_json();
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key.rfind("model.", 0) != 0) continue;
        const std::string rest = key.substr(6);
        const auto dot = rest.find('.');
        if (dot == std::string::npos) m[rest] = it.value();
        else m[rest.substr(0, dot)][rest.substr(dot + 1)] = it.value();
    }
    c.model = model::ModelConfig::from_json(m);
    // Output geometry follows the training geometry unless explicitly set.
    if (!j.contains("model.output_size")) {
        c.model.out_t = c.frames;
        c.model.out_h = c.resolution;
        c.model.out_w = c.resolution;
    }
    return c;
}

void TrainConfig::apply_override(json& flat, const std::string& key, const std::string& value) {
    if (!flat.contains(key))
        throw std::invalid_argument("override references unknown config key '" + key + "'");
    const json& cur = flat.at(key);
    json parsed;
    if (cur.is_string()) {
        parsed = value;
    } else {
        parsed = json::parse(value, nullptr, false);
        if (parsed.is_discarded())
            throw std::invalid_argument("cannot parse override value for '" + key + "'");
    }
    flat[key] = parsed;
}

std::uint64_t TrainConfig::config_hash() const {
    const std::string s = to_json().dump();
    return fnv1a64_bytes(s.data(), s.size());
}

void TrainConfig::validate() const {
    if (epochs < 0) throw std::invalid_argument("config: negative epochs");
    if (batch_size <= 0 || batch_size % 2)
        throw std::invalid_argument("config: batch_size must be positive and even");
    if (frames < 2) throw std::invalid_argument("config: frames must be >= 2");
    if (skip < 1) throw std::invalid_argument("config: skip must be >= 1");
    if (lr <= 0) throw std::invalid_argument("config: lr must be positive");
    if (lambda < 0 || lambda1 < 0 || lambda2 < 0)
        throw std::invalid_argument("config: negative loss weights");
    if (labeled_fraction <= 0 || labeled_fraction > 1)
        throw std::invalid_argument("config: labeled_fraction must be in (0,1]");
    if (w_max < 0 || w_max > 1) throw std::invalid_argument("config: w_max must be in [0,1]");
    if (both_variant != losses::Mode::semi_lc && both_variant != losses::Mode::semi_var &&
        both_variant != losses::Mode::semi_grad)
        throw std::invalid_argument("config: both_variant must be a localization variant");
    model.validate();
}

}  // namespace stssl::trainer
