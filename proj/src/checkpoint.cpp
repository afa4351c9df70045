#include "dfm/checkpoint.hpp"

#include "dfm/error.hpp"

#include <fstream>
#include <sstream>

namespace dfm {

using nlohmann::json;

namespace {

json adam_to_json(const nn::AdamState& s) {
    return json{{"lr", s.config.lr},
                {"beta1", s.config.beta1},
                {"beta2", s.config.beta2},
                {"eps", s.config.eps},
                {"weight_decay", s.config.weight_decay},
                {"step", s.step},
                {"m", s.m.flatten()},
                {"v", s.v.flatten()}};
}

nn::AdamState adam_from_json(const json& j, const std::vector<std::size_t>& dims) {
    nn::AdamState s;
    s.config.lr = j.at("lr").get<double>();
    s.config.beta1 = j.at("beta1").get<double>();
    s.config.beta2 = j.at("beta2").get<double>();
    s.config.eps = j.at("eps").get<double>();
    s.config.weight_decay = j.at("weight_decay").get<double>();
    s.step = j.at("step").get<std::uint64_t>();
    s.m = nn::mlp_zeros(dims);
    s.v = nn::mlp_zeros(dims);
    s.m.unflatten(j.at("m").get<std::vector<double>>());
    s.v.unflatten(j.at("v").get<std::vector<double>>());
    return s;
}

} // namespace

json checkpoint_to_json(const Checkpoint& ck) {
    json j{{"version", ck.version},
           {"role", ck.role},
           {"layer_dims", ck.net.dims},
           {"params", ck.net.flatten()},
           {"seed", ck.seed},
           {"iteration", ck.iteration},
           {"meta", ck.meta}};
    j["optimizer"] = ck.optimizer ? adam_to_json(*ck.optimizer) : json(nullptr);
    return j;
}

Checkpoint checkpoint_from_json(const json& j) {
    try {
        Checkpoint ck;
        ck.version = j.at("version").get<int>();
        if (ck.version != kCheckpointVersion) {
            throw IoError("unsupported checkpoint version " + std::to_string(ck.version));
        }
        ck.role = j.at("role").get<std::string>();
        const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
        ck.net = nn::mlp_zeros(dims);
        ck.net.unflatten(j.at("params").get<std::vector<double>>());
        ck.seed = j.at("seed").get<std::uint64_t>();
        ck.iteration = j.at("iteration").get<std::uint64_t>();
        ck.meta = j.value("meta", json::object());
        if (j.contains("optimizer") && !j.at("optimizer").is_null()) {
            ck.optimizer = adam_from_json(j.at("optimizer"), dims);
        }
        return ck;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out << checkpoint_to_json(ck).dump(1) << '\n';
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read checkpoint " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
    }
    return checkpoint_from_json(j);
}

} // namespace dfm
