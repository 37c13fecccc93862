#include "viforecast/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace viforecast {

using nlohmann::json;

OptimizerConfig RunConfig::desk_optimizer() {
    OptimizerConfig o;
    o.base_lr = 1e-3;
    o.warmup_steps = 100;
    o.total_steps = 2000;
    o.batch_size = 32;
    return o;
}

namespace {

template <class T>
T get_as(const json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(key + ": wrong type");
    }
}

void parse_model(const json& j, ModelConfig& m) {
    if (j.contains("preset")) {
        const auto preset = get_as<std::string>(j["preset"], "model.preset");
        if (preset == "desk") m = ModelConfig::desk();
        else if (preset == "full") m = ModelConfig::full_size();
        else throw ConfigError("model.preset: unknown preset '" + preset + "'");
    }
    for (const auto& [key, v] : j.items()) {
        const std::string k = "model." + key;
        if (key == "preset") continue;
        else if (key == "width") m.width = get_as<int>(v, k);
        else if (key == "patch") m.patch = get_as<int>(v, k);
        else if (key == "enc_dim") m.enc_dim = get_as<int>(v, k);
        else if (key == "enc_depth") m.enc_depth = get_as<int>(v, k);
        else if (key == "enc_heads") m.enc_heads = get_as<int>(v, k);
        else if (key == "dec_dim") m.dec_dim = get_as<int>(v, k);
        else if (key == "dec_depth") m.dec_depth = get_as<int>(v, k);
        else if (key == "dec_heads") m.dec_heads = get_as<int>(v, k);
        else if (key == "mlp_ratio") m.mlp_ratio = get_as<double>(v, k);
        else if (key == "heads") m.heads = get_as<int>(v, k);
        else if (key == "seed") m.seed = get_as<std::uint64_t>(v, k);
        else throw ConfigError(k + ": unknown key");
    }
}

void parse_optim(const json& j, OptimizerConfig& o) {
    for (const auto& [key, v] : j.items()) {
        const std::string k = "optim." + key;
        if (key == "base_lr") o.base_lr = get_as<double>(v, k);
        else if (key == "weight_decay") o.weight_decay = get_as<double>(v, k);
        else if (key == "beta1") o.beta1 = get_as<double>(v, k);
        else if (key == "beta2") o.beta2 = get_as<double>(v, k);
        else if (key == "eps") o.eps = get_as<double>(v, k);
        else if (key == "warmup_steps") o.warmup_steps = get_as<int>(v, k);
        else if (key == "total_steps") o.total_steps = get_as<int>(v, k);
        else if (key == "batch_size") o.batch_size = get_as<int>(v, k);
        else if (key == "grad_clip") {
            if (v.is_null()) o.grad_clip.reset();
            else o.grad_clip = get_as<double>(v, k);
        } else throw ConfigError(k + ": unknown key");
    }
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig cfg;
    for (const auto& [section, body] : root.items()) {
        if (!body.is_object()) throw ConfigError(section + ": expected a section object");
        if (section == "model") {
            parse_model(body, cfg.model);
        } else if (section == "optim") {
            parse_optim(body, cfg.optim);
        } else if (section == "data") {
            for (const auto& [key, v] : body.items()) {
                const std::string k = "data." + key;
                if (key == "archive") cfg.archive = get_as<std::string>(v, k);
                else if (key == "horizons") cfg.data.horizon_multiples = get_as<std::vector<int>>(v, k);
                else if (key == "lookback_ratios") cfg.data.lookback_ratios = get_as<std::vector<int>>(v, k);
                else if (key == "grayscale") cfg.data.grayscale = get_as<bool>(v, k);
                else throw ConfigError(k + ": unknown key");
            }
        } else if (section == "filter") {
            for (const auto& [key, v] : body.items()) {
                if (key == "enabled") cfg.data.filter = get_as<bool>(v, "filter.enabled");
                else throw ConfigError("filter." + key + ": unknown key");
            }
        } else if (section == "norm") {
            for (const auto& [key, v] : body.items()) {
                if (key == "r") cfg.data.r = get_as<double>(v, "norm.r");
                else if (key == "eps") cfg.data.eps = get_as<double>(v, "norm.eps");
                else throw ConfigError("norm." + key + ": unknown key");
            }
        } else if (section == "pixel") {
            for (const auto& [key, v] : body.items()) {
                if (key == "mean") cfg.data.pixel_mean = get_as<std::array<double, 3>>(v, "pixel.mean");
                else if (key == "std") cfg.data.pixel_std = get_as<std::array<double, 3>>(v, "pixel.std");
                else throw ConfigError("pixel." + key + ": unknown key");
            }
        } else if (section == "train") {
            for (const auto& [key, v] : body.items()) {
                const std::string k = "train." + key;
                if (key == "seed") cfg.seed = get_as<std::uint64_t>(v, k);
                else if (key == "log_every") cfg.log_every = get_as<int>(v, k);
                else if (key == "init") cfg.init = get_as<std::string>(v, k);
                else throw ConfigError(k + ": unknown key");
            }
        } else {
            throw ConfigError(section + ": unknown section");
        }
    }
    cfg.model.validate();
    cfg.optim.validate();
    if (!(cfg.data.r > 0.0 && cfg.data.r <= 1.0)) throw ConfigError("norm.r: must lie in (0, 1]");
    if (!(cfg.data.eps > 0.0)) throw ConfigError("norm.eps: must be positive");
    (void)cfg.data.bounds();
    for (int k : cfg.data.horizon_multiples) {
        if (k < 1) throw ConfigError("data.horizons: multiples must be positive");
    }
    for (int k : cfg.data.lookback_ratios) {
        if (k < 1) throw ConfigError("data.lookback_ratios: ratios must be positive");
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

}  // namespace viforecast
