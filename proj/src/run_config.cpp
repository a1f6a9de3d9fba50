#include "fcvae/run_config.hpp"

#include <cstdint>
#include <fstream>
#include <set>

#include "fcvae/data.hpp"
#include "fcvae/errors.hpp"

namespace fcvae {

using nlohmann::json;

namespace {

bool is_count(const json& v) { return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0); }

template <class T>
void read(const json& doc, const char* key, T& out) {
    if (!doc.contains(key)) return;
    try {
        const auto& v = doc.at(key);
        if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
            if (!is_count(v)) throw ConfigError(key, "expected a non-negative integer");
        } else if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw ConfigError(key, "expected a number");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(key, "expected a string");
        }
        out = v.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(key, e.what());
    }
}

const std::set<std::string>& model_keys() {
    static const std::set<std::string> keys{"window",  "small_window", "small_stride", "embed_dim", "latent_dim",
                                            "hidden",  "dropout",      "lfm_mode",     "use_gfm",   "use_lfm",
                                            "mask_last", "mc_samples"};
    return keys;
}

const std::set<std::string>& run_keys() {
    static const std::set<std::string> keys{"epochs",       "batch_size",    "lr",         "missing_rate",
                                            "augment_rate", "seed",          "valid_fraction", "stride",
                                            "plain_elbo",   "use_labels",    "mcmc_steps", "score_samples",
                                            "score_batch_size", "delay",     "per_curve",  "data_dir",
                                            "model_path",   "out_dir"};
    return keys;
}

void read_model(const json& doc, FcvaeConfig& c) {
    read(doc, "window", c.window);
    read(doc, "small_window", c.small_window);
    read(doc, "small_stride", c.small_stride);
    read(doc, "embed_dim", c.embed_dim);
    read(doc, "latent_dim", c.latent_dim);
    if (doc.contains("hidden")) {
        const auto& h = doc.at("hidden");
        if (!h.is_array()) throw ConfigError("hidden", "expected an array of layer widths");
        c.hidden.clear();
        for (const auto& v : h) {
            if (!is_count(v)) throw ConfigError("hidden", "layer widths must be non-negative integers");
            c.hidden.push_back(v.get<std::size_t>());
        }
    }
    read(doc, "dropout", c.dropout);
    if (doc.contains("lfm_mode")) {
        std::string mode;
        read(doc, "lfm_mode", mode);
        c.lfm_mode = parse_lfm_mode(mode);
    }
    read(doc, "use_gfm", c.use_gfm);
    read(doc, "use_lfm", c.use_lfm);
    read(doc, "mask_last", c.mask_last);
    read(doc, "mc_samples", c.mc_samples);
}

}  // namespace

json model_config_to_json(const FcvaeConfig& c) {
    return json{{"window", c.window},         {"small_window", c.small_window}, {"small_stride", c.small_stride},
                {"embed_dim", c.embed_dim},   {"latent_dim", c.latent_dim},     {"hidden", c.hidden},
                {"dropout", c.dropout},       {"lfm_mode", to_string(c.lfm_mode)}, {"use_gfm", c.use_gfm},
                {"use_lfm", c.use_lfm},       {"mask_last", c.mask_last},       {"mc_samples", c.mc_samples}};
}

FcvaeConfig model_config_from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config", "expected a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (!model_keys().count(key)) throw ConfigError(key, "unknown model configuration key");
    }
    FcvaeConfig c;
    read_model(doc, c);
    c.validate();
    return c;
}

void RunConfig::validate() const {
    model.validate();
    train.validate();
    detector.validate();
    data::PreprocessConfig{model.window, train.stride, train.missing_rate, train.augment_rate, train.seed}.validate();
}

RunConfig run_config_from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config", "expected a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (!model_keys().count(key) && !run_keys().count(key)) throw ConfigError(key, "unknown configuration key");
    }
    RunConfig c;
    read_model(doc, c.model);
    read(doc, "epochs", c.train.epochs);
    read(doc, "batch_size", c.train.batch_size);
    read(doc, "lr", c.train.lr);
    read(doc, "missing_rate", c.train.missing_rate);
    read(doc, "augment_rate", c.train.augment_rate);
    read(doc, "seed", c.train.seed);
    c.detector.seed = c.train.seed;
    read(doc, "valid_fraction", c.train.valid_fraction);
    read(doc, "stride", c.train.stride);
    bool plain = false;
    read(doc, "plain_elbo", plain);
    c.train.elbo = plain ? ElboKind::plain : ElboKind::masked;
    read(doc, "use_labels", c.train.use_labels);
    read(doc, "mcmc_steps", c.detector.mcmc_steps);
    read(doc, "score_samples", c.detector.score_samples);
    read(doc, "score_batch_size", c.detector.batch_size);
    read(doc, "delay", c.delay);
    read(doc, "per_curve", c.per_curve);
    read(doc, "data_dir", c.data_dir);
    read(doc, "model_path", c.model_path);
    read(doc, "out_dir", c.out_dir);
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config", path.string() + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(doc);
}

json run_config_to_json(const RunConfig& c) {
    json doc = model_config_to_json(c.model);
    doc["epochs"] = c.train.epochs;
    doc["batch_size"] = c.train.batch_size;
    doc["lr"] = c.train.lr;
    doc["missing_rate"] = c.train.missing_rate;
    doc["augment_rate"] = c.train.augment_rate;
    doc["seed"] = c.train.seed;
    doc["valid_fraction"] = c.train.valid_fraction;
    doc["stride"] = c.train.stride;
    doc["plain_elbo"] = c.train.elbo == ElboKind::plain;
    doc["use_labels"] = c.train.use_labels;
    doc["mcmc_steps"] = c.detector.mcmc_steps;
    doc["score_samples"] = c.detector.score_samples;
    doc["score_batch_size"] = c.detector.batch_size;
    doc["delay"] = c.delay;
    doc["per_curve"] = c.per_curve;
    doc["data_dir"] = c.data_dir;
    doc["model_path"] = c.model_path;
    doc["out_dir"] = c.out_dir;
    return doc;
}

}  // namespace fcvae
