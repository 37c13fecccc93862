#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "viforecast/backbone.hpp"
#include "viforecast/training.hpp"

namespace viforecast {

/// Everything a pretraining run needs. Loaded from a JSON file with the
/// sections `model`, `optim`, `data`, `filter`, `norm`, `pixel`, `train`.
struct RunConfig {
    ModelConfig model = ModelConfig::desk();
    OptimizerConfig optim = desk_optimizer();
    DataConfig data;
    std::string archive;        // data.archive
    std::string init = "random";  // train.init: random | pretrained:<path>
    std::uint64_t seed = 0;     // train.seed
    int log_every = 100;        // train.log_every

    /// 2000 steps of batch 32 at lr 1e-3 with a 100-step warm-up.
    static OptimizerConfig desk_optimizer();
};

/// Unknown keys raise ConfigError naming the dotted key.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace viforecast
