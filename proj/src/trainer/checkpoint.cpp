#include "stssl/trainer/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "stssl/core/io.hpp"

namespace stssl::trainer {

using nlohmann::json;

namespace {

void put_u32(std::ofstream& f, std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), 4);  // little-endian hosts only
}
std::uint32_t get_u32(std::ifstream& f) {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

}  // namespace

void write_tensor_blob(const std::filesystem::path& path,
                       const std::vector<std::string>& names,
                       const std::vector<const Tensor<float>*>& f32,
                       const std::vector<const Tensor<double>*>& f64) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.write("STPK", 4);
    put_u32(f, static_cast<std::uint32_t>(names.size()));
    std::size_t i32 = 0, i64 = 0;
    for (const auto& name : names) {
        const bool is64 = i32 >= f32.size();
        put_u32(f, static_cast<std::uint32_t>(name.size()));
        f.write(name.data(), static_cast<std::streamsize>(name.size()));
        f.put(is64 ? 1 : 0);
        const std::vector<int>& shape = is64 ? f64[i64]->shape() : f32[i32]->shape();
        f.put(static_cast<char>(shape.size()));
        for (int d : shape) put_u32(f, static_cast<std::uint32_t>(d));
        if (is64) {
            const auto* t = f64[i64++];
            f.write(reinterpret_cast<const char*>(t->data()),
                    static_cast<std::streamsize>(t->size() * sizeof(double)));
        } else {
            const auto* t = f32[i32++];
            f.write(reinterpret_cast<const char*>(t->data()),
                    static_cast<std::streamsize>(t->size() * sizeof(float)));
        }
    }
    if (!f) throw std::runtime_error("short write " + path.string());
}

void read_tensor_blob(const std::filesystem::path& path, std::vector<std::string>& names,
                      std::vector<Tensor<float>>& f32, std::vector<Tensor<double>>& f64,
                      std::vector<int>& kinds) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "STPK", 4) != 0)
        throw std::runtime_error("bad tensor blob magic in " + path.string());
    const std::uint32_t count = get_u32(f);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t nlen = get_u32(f);
        std::string name(nlen, '\0');
        f.read(name.data(), nlen);
        const int kind = f.get();
        const int ndim = f.get();
        std::vector<int> shape(static_cast<std::size_t>(ndim));
        for (int d = 0; d < ndim; ++d) shape[static_cast<std::size_t>(d)] = static_cast<int>(get_u32(f));
        names.push_back(name);
        kinds.push_back(kind);
        if (kind == 1) {
            Tensor<double> t(shape);
            f.read(reinterpret_cast<char*>(t.data()),
                   static_cast<std::streamsize>(t.size() * sizeof(double)));
            f64.push_back(std::move(t));
        } else {
            Tensor<float> t(shape);
            f.read(reinterpret_cast<char*>(t.data()),
                   static_cast<std::streamsize>(t.size() * sizeof(float)));
            f32.push_back(std::move(t));
        }
        if (!f) throw std::runtime_error("truncated tensor blob " + path.string());
    }
}

void save_checkpoint(const std::filesystem::path& dir, const TrainState& state,
                     const TrainConfig& cfg) {
    std::filesystem::create_directories(dir);
    {
        std::vector<const Tensor<float>*> vals;
        for (const auto& t : state.params.values) vals.push_back(&t);
        write_tensor_blob(dir / "params.bin", state.params.names, vals, {});
    }
    {
        std::vector<std::string> names;
        std::vector<const Tensor<double>*> vals;
        for (std::size_t i = 0; i < state.params.names.size(); ++i) {
            names.push_back("m." + state.params.names[i]);
            vals.push_back(&state.adam.m[i]);
        }
        for (std::size_t i = 0; i < state.params.names.size(); ++i) {
            names.push_back("v." + state.params.names[i]);
            vals.push_back(&state.adam.v[i]);
        }
        write_tensor_blob(dir / "optim.bin", names, {}, vals);
    }
    json j;
    j["epoch"] = state.next_epoch;
    j["global_step"] = state.global_step;
    j["config_hash"] = hex64(cfg.config_hash());
    j["seed"] = cfg.seed;
    j["code_version"] = kCodeVersion;
    j["best_metric"] = state.best_metric;
    j["adam_t"] = state.adam.t;
    j["rng_states"] = {{"sampler", state.sampler.state()}, {"augment", state.aug_rng.state_hex()}};
    j["plateau"] = state.plateau.state();
    j["epoch_losses"] = state.epoch_losses;
    j["model_config"] = cfg.model.to_json();
    j["train_config"] = cfg.to_json();
    write_json_file(dir / "manifest.json", j);
}

TrainState load_checkpoint(const std::filesystem::path& dir, const TrainConfig& cfg,
                           const model::Network<float>& net) {
    const json j = read_json_file(dir / "manifest.json");
    if (j.at("config_hash").get<std::string>() != hex64(cfg.config_hash())) {
        // Point at the exact architecture field when the model disagrees.
        const json stored = j.at("model_config");
        const json current = cfg.model.to_json();
        for (auto it = current.begin(); it != current.end(); ++it) {
            if (!stored.contains(it.key()) || stored.at(it.key()) != it.value()) {
                throw std::runtime_error("checkpoint model config mismatch at field '" +
                                         it.key() + "'");
            }
        }
        if (!cfg.force_resume)
            throw std::runtime_error(
                "checkpoint config hash mismatch (use force_resume to override)");
    }

    TrainState st;
    st.params.names = net.param_names();
    {
        std::vector<std::string> names;
        std::vector<Tensor<float>> f32;
        std::vector<Tensor<double>> f64;
        std::vector<int> kinds;
        read_tensor_blob(dir / "params.bin", names, f32, f64, kinds);
        if (names != net.param_names())
            throw std::runtime_error("checkpoint parameter names disagree with model");
        st.params.values = std::move(f32);
        for (std::size_t i = 0; i < st.params.values.size(); ++i)
            if (st.params.values[i].shape() != net.param_shapes()[i])
                throw std::runtime_error("checkpoint model config mismatch at field '" +
                                         net.param_names()[i] + "'");
    }
    {
        std::vector<std::string> names;
        std::vector<Tensor<float>> f32;
        std::vector<Tensor<double>> f64;
        std::vector<int> kinds;
        read_tensor_blob(dir / "optim.bin", names, f32, f64, kinds);
        const std::size_t P = st.params.values.size();
        if (f64.size() != 2 * P) throw std::runtime_error("optimizer blob size mismatch");
        st.adam.m.assign(f64.begin(), f64.begin() + static_cast<long>(P));
        st.adam.v.assign(f64.begin() + static_cast<long>(P), f64.end());
    }
    st.adam.t = j.at("adam_t").get<long long>();
    st.next_epoch = j.at("epoch").get<int>();
    st.global_step = j.at("global_step").get<long long>();
    st.best_metric = j.at("best_metric").get<double>();
    st.sampler.restore(j.at("rng_states").at("sampler"));
    Rng aug;
    aug.set_state_hex(j.at("rng_states").at("augment").get<std::string>());
    st.aug_rng = aug;
    st.plateau.restore(j.at("plateau"));
    st.epoch_losses = j.at("epoch_losses").get<std::vector<double>>();
    return st;
}

}  // namespace stssl::trainer
