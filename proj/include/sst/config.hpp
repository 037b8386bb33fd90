#pragma once

#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "sst/trainer.hpp"

namespace sst {

struct WorldConfig {
    std::size_t categories = 20;
    std::size_t raw_dim = 16;
    double link_density = 0.15;
    double noise_sigma = 0.3;
    double distractor_rate = 2.0;
    std::size_t train_samples = 2000;
    std::size_t test_samples = 500;
    double known_proportion = 0.1;
};

// Everything needed to reproduce a run. Serialized as one flat JSON object;
// unknown keys are rejected and missing keys keep their defaults.
struct RunConfig {
    WorldConfig world;
    TrainingConfig training;
    double decision_threshold = 0.5;  // tau for the P/R/F1 family
    std::uint64_t seed = 0;

    // The shipped reference benchmark.
    static RunConfig bench_small();
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace sst
