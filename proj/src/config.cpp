#include "patchtrack/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "patchtrack/error.hpp"

namespace patchtrack {

namespace {

using nlohmann::json;

template <typename T>
T get_as(const json& v, const std::string& key) {
    bool ok = v.is_number();
    if constexpr (std::is_unsigned_v<T>) ok = v.is_number_unsigned();
    else if constexpr (std::is_integral_v<T>) ok = v.is_number_integer();
    if (!ok) throw ConfigError("config key '" + key + "' has the wrong type");
    return v.get<T>();
}

}  // namespace

void apply_config_json(const std::string& text, TrackerConfig& out) {
    TrackerConfig cfg = out; // `out` is left untouched on error
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config must be a JSON object");

    for (const auto& [key, v] : root.items()) {
        if (key == "n_templates") cfg.n_templates = get_as<int>(v, key);
        else if (key == "template_update_period") cfg.template_update_period = get_as<int>(v, key);
        else if (key == "large_update_period") cfg.large_update_period = get_as<int>(v, key);
        else if (key == "small_update_period") cfg.small_update_period = get_as<int>(v, key);
        else if (key == "n_particles") cfg.n_particles = get_as<int>(v, key);
        else if (key == "upsilon") cfg.upsilon = get_as<int>(v, key);
        else if (key == "eigvecs") cfg.eigvecs = get_as<int>(v, key);
        else if (key == "seed") cfg.seed = get_as<std::uint64_t>(v, key);
        else if (key == "beta") cfg.gates.beta = get_as<double>(v, key);
        else if (key == "eps") cfg.gates.eps = get_as<double>(v, key);
        else if (key == "delta") cfg.gates.delta = get_as<double>(v, key);
        else if (key == "o1") cfg.gates.o1 = get_as<double>(v, key);
        else if (key == "o2") cfg.gates.o2 = get_as<double>(v, key);
        else if (key == "eta") cfg.gates.eta = get_as<double>(v, key);
        else if (key == "residual_tol") cfg.residual_tol = get_as<double>(v, key);
        else if (key == "forgetting") cfg.forgetting = get_as<double>(v, key);
        else if (key == "guided_radius") cfg.guided.radius = get_as<int>(v, key);
        else if (key == "guided_reg") cfg.guided.reg = get_as<double>(v, key);
        else if (key == "threads") cfg.threads = get_as<int>(v, key);
        else if (key == "sigma") {
            if (!v.is_array() || v.size() != cfg.sigma.size())
                throw ConfigError("config key 'sigma' must be an array of 6 numbers");
            for (std::size_t c = 0; c < cfg.sigma.size(); ++c) cfg.sigma[c] = get_as<double>(v[c], key);
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    cfg.validate();
    out = cfg;
}

TrackerConfig load_config(const std::filesystem::path& path, TrackerConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_json(ss.str(), base);
    return base;
}

std::string config_to_json(const TrackerConfig& cfg) {
    json j;
    j["n_templates"] = cfg.n_templates;
    j["template_update_period"] = cfg.template_update_period;
    j["large_update_period"] = cfg.large_update_period;
    j["small_update_period"] = cfg.small_update_period;
    j["n_particles"] = cfg.n_particles;
    j["sigma"] = cfg.sigma;
    j["upsilon"] = cfg.upsilon;
    j["eigvecs"] = cfg.eigvecs;
    j["seed"] = cfg.seed;
    j["beta"] = cfg.gates.beta;
    j["eps"] = cfg.gates.eps;
    j["delta"] = cfg.gates.delta;
    j["o1"] = cfg.gates.o1;
    j["o2"] = cfg.gates.o2;
    j["eta"] = cfg.gates.eta;
    j["residual_tol"] = cfg.residual_tol;
    j["forgetting"] = cfg.forgetting;
    j["guided_radius"] = cfg.guided.radius;
    j["guided_reg"] = cfg.guided.reg;
    j["threads"] = cfg.threads;
    return j.dump(2);
}

}  // namespace patchtrack
