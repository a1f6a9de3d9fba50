#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "fcvae/data.hpp"
#include "fcvae/model.hpp"

namespace fcvae {

inline constexpr int kModelFormatVersion = 1;

/// Everything needed to score new data with a trained model.
struct ModelBundle {
    FcvaeModel model;
    /// Standardisation statistics of each training curve, by curve id.
    std::map<std::string, data::Normalization> normalization;
};

/// `{format_version, config, parameters: {name: {shape, data}}, normalization}`.
std::string serialize_model(const FcvaeModel& model,
                            const std::map<std::string, data::Normalization>& normalization = {});
ModelBundle deserialize_model(const std::string& text);

void save_model(const std::filesystem::path& path, const FcvaeModel& model,
                const std::map<std::string, data::Normalization>& normalization = {});
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace fcvae
