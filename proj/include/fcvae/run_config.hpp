#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>

#include "fcvae/detector.hpp"
#include "fcvae/model.hpp"
#include "fcvae/trainer.hpp"

namespace fcvae {

/// Everything a command can be configured with. Serialised as one flat JSON
/// object; unknown keys are rejected so typos do not pass silently.
struct RunConfig {
    FcvaeConfig model;
    TrainConfig train;
    DetectorConfig detector;
    std::size_t delay = 7;
    bool per_curve = true;
    std::string data_dir;
    std::string model_path;
    std::string out_dir;

    /// Validates every section; throws ConfigError naming the key.
    void validate() const;
};

RunConfig run_config_from_json(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_to_json(const RunConfig& config);

nlohmann::json model_config_to_json(const FcvaeConfig& config);
FcvaeConfig model_config_from_json(const nlohmann::json& doc);

}  // namespace fcvae
