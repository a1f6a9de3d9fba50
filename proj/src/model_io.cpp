#include "fcvae/model_io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "fcvae/errors.hpp"
#include "fcvae/run_config.hpp"

namespace fcvae {

using nlohmann::json;

std::string serialize_model(const FcvaeModel& model, const std::map<std::string, data::Normalization>& normalization) {
    json doc;
    doc["format_version"] = kModelFormatVersion;
    doc["config"] = model_config_to_json(model.config());
    json params = json::object();
    for (const auto& [name, t] : model.params()) {
        params[name] = {{"shape", t.shape()}, {"data", t.to_vector()}};
    }
    doc["parameters"] = std::move(params);
    json norm = json::object();
    for (const auto& [id, n] : normalization) norm[id] = {{"mean", n.mean}, {"std", n.std}};
    doc["normalization"] = std::move(norm);
    return doc.dump(1) + "\n";
}

ModelBundle deserialize_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("model", std::string("not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("format_version"))
        throw ConfigError("format_version", "missing from model document");
    if (doc["format_version"] != kModelFormatVersion)
        throw ConfigError("format_version", "unsupported version " + doc["format_version"].dump());
    try {
        auto config = model_config_from_json(doc.at("config"));
        nn::ParameterStore params;
        for (const auto& [name, entry] : doc.at("parameters").items()) {
            params.add(name, nn::Tensor(entry.at("shape").get<nn::Shape>(), entry.at("data").get<std::vector<double>>()));
        }
        std::map<std::string, data::Normalization> norm;
        if (doc.contains("normalization")) {
            for (const auto& [id, entry] : doc["normalization"].items()) {
                norm[id] = {entry.at("mean").get<double>(), entry.at("std").get<double>()};
            }
        }
        return {FcvaeModel(std::move(config), std::move(params)), std::move(norm)};
    } catch (const json::exception& e) {
        throw ConfigError("model", std::string("malformed model document: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const FcvaeModel& model,
                const std::map<std::string, data::Normalization>& normalization) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << serialize_model(model, normalization);
}

ModelBundle load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_model(buf.str());
}

}  // namespace fcvae
