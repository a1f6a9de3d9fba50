// fcvae: train, score, evaluate, synthesise and plot from the command line.
//
// Exit codes: 0 ok, 1 configuration/usage error, 2 data error, 3 numeric failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "fcvae/data.hpp"
#include "fcvae/detector.hpp"
#include "fcvae/errors.hpp"
#include "fcvae/evaluator.hpp"
#include "fcvae/model_io.hpp"
#include "fcvae/run_config.hpp"
#include "fcvae/svg_plot.hpp"
#include "fcvae/synth.hpp"
#include "fcvae/trainer.hpp"

namespace fs = std::filesystem;
using namespace fcvae;

namespace {

enum Exit { kOk = 0, kConfig = 1, kData = 2, kNumeric = 3 };

struct TrainArgs {
    std::string config;
    std::string data;
    std::string out;
    std::optional<std::size_t> epochs;
    std::optional<std::uint64_t> seed;
    bool no_gfm = false;
    bool no_lfm = false;
    std::string lfm_mode;
    bool no_augment = false;
    bool no_mask_last = false;
    bool plain_elbo = false;
    bool quiet = false;
};

struct ScoreArgs {
    std::string config;
    std::string model;
    std::string data;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> mcmc_steps;
    std::optional<std::size_t> score_samples;
};

struct EvalArgs {
    std::string config;
    std::string scores;
    std::optional<std::size_t> delay;
    std::string out;
    bool no_per_curve = false;
};

struct SynthArgs {
    std::string out;
    SynthConfig config;
};

struct PlotArgs {
    std::string scores;
    std::string out;
    std::string data;
    std::optional<double> threshold;
};

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

fs::path sibling(const fs::path& model_path, const std::string& suffix) {
    return model_path.parent_path() / (model_path.stem().string() + suffix);
}

RunConfig base_config(const std::string& path) {
    return path.empty() ? RunConfig{} : load_run_config(path);
}

int cmd_train(const TrainArgs& a) {
    RunConfig cfg = base_config(a.config);
    if (!a.data.empty()) cfg.data_dir = a.data;
    if (!a.out.empty()) cfg.model_path = a.out;
    if (a.epochs) cfg.train.epochs = *a.epochs;
    if (a.seed) {
        cfg.train.seed = *a.seed;
        cfg.detector.seed = *a.seed;
    }
    if (a.no_gfm) cfg.model.use_gfm = false;
    if (a.no_lfm) cfg.model.use_lfm = false;
    if (!a.lfm_mode.empty()) cfg.model.lfm_mode = parse_lfm_mode(a.lfm_mode);
    if (a.no_augment) cfg.train.augment_rate = 0.0;
    if (a.no_mask_last) cfg.model.mask_last = false;
    if (a.plain_elbo) cfg.train.elbo = ElboKind::plain;
    if (cfg.data_dir.empty()) throw ConfigError("data_dir", "required (--data)");
    if (cfg.model_path.empty()) throw ConfigError("model_path", "required (--out)");
    cfg.validate();

    const auto dataset = data::load_dataset(cfg.data_dir);
    auto on_epoch = [&](std::size_t epoch, double train_loss, double valid_loss) {
        if (a.quiet) return;
        std::fprintf(stderr, "epoch %zu/%zu  loss %.5f", epoch, cfg.train.epochs, train_loss);
        if (cfg.train.valid_fraction > 0.0) std::fprintf(stderr, "  valid %.5f", valid_loss);
        std::fputc('\n', stderr);
    };
    const TrainResult result = train(dataset, cfg.model, cfg.train, on_epoch);

    const fs::path model_path = cfg.model_path;
    if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
    save_model(model_path, result.model, result.normalization);
    write_history_csv(result.history, sibling(model_path, ".history.csv"));
    write_text(sibling(model_path, ".config.json"), run_config_to_json(cfg).dump(2) + "\n");
    return kOk;
}

int cmd_score(const ScoreArgs& a) {
    RunConfig cfg = base_config(a.config);
    if (!a.model.empty()) cfg.model_path = a.model;
    if (!a.data.empty()) cfg.data_dir = a.data;
    if (!a.out.empty()) cfg.out_dir = a.out;
    if (a.seed) cfg.detector.seed = *a.seed;
    if (a.mcmc_steps) cfg.detector.mcmc_steps = *a.mcmc_steps;
    if (a.score_samples) cfg.detector.score_samples = *a.score_samples;
    if (cfg.model_path.empty()) throw ConfigError("model_path", "required (--model)");
    if (cfg.data_dir.empty()) throw ConfigError("data_dir", "required (--data)");
    if (cfg.out_dir.empty()) throw ConfigError("out_dir", "required (--out)");
    cfg.validate();

    const ModelBundle bundle = load_model(cfg.model_path);
    if (!a.config.empty() && bundle.model.config().window != cfg.model.window) {
        throw ConfigError("window", "config has " + std::to_string(cfg.model.window) + " but the model was trained with " +
                                        std::to_string(bundle.model.config().window));
    }
    const auto dataset = data::load_dataset(cfg.data_dir);
    fs::create_directories(cfg.out_dir);
    for (const auto& raw : dataset) {
        const ScoreSeries scores = score_series(prepare_for_scoring(raw, bundle), bundle.model, cfg.detector);
        write_scores_csv(scores, fs::path(cfg.out_dir) / (raw.curve_id + ".csv"));
    }
    return kOk;
}

int cmd_eval(const EvalArgs& a) {
    RunConfig cfg = base_config(a.config);
    if (a.delay) cfg.delay = *a.delay;
    if (a.no_per_curve) cfg.per_curve = false;
    const auto scores = load_scores_dir(a.scores);
    const std::string report = evaluation_report(scores, cfg.delay, cfg.per_curve);
    if (a.out.empty()) {
        std::cout << report << '\n';
    } else {
        write_text(a.out, report + "\n");
    }
    return kOk;
}

int cmd_synth(const SynthArgs& a) {
    a.config.validate();
    const auto curves = synthesize(a.config);
    const fs::path out = a.out;
    fs::create_directories(out / "labels");
    for (const auto& c : curves) {
        data::write_csv(c.series, out / (c.series.curve_id + ".csv"));
        std::string labels = "timestamp,label\n";
        for (std::size_t i = 0; i < c.series.size(); ++i) {
            labels += std::to_string(c.series.timestamps[i]) + ',' + std::to_string(c.series.labels[i]) + '\n';
        }
        write_text(out / "labels" / (c.series.curve_id + ".csv"), labels);
    }
    return kOk;
}

int cmd_plot(const PlotArgs& a) {
    const ScoreSeries scores = load_scores_csv(a.scores);
    std::optional<std::vector<double>> values;
    if (!a.data.empty()) {
        const auto ts = data::load_csv(a.data);
        if (ts.timestamps != scores.timestamps) throw DataError(a.data + ": timestamps differ from the score file");
        values = ts.values;
    }
    PlotOptions options;
    options.threshold = a.threshold;
    write_text(a.out, render_svg(scores, values ? &*values : nullptr, options));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency-conditioned VAE anomaly detector for univariate time series"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train a model on every CSV in a directory");
    train_cmd->add_option("--config", train_args.config, "JSON run configuration");
    train_cmd->add_option("--data", train_args.data, "Directory of timestamp,value,label CSVs");
    train_cmd->add_option("--out", train_args.out, "Model file to write");
    train_cmd->add_option("--epochs", train_args.epochs, "Override the number of epochs");
    train_cmd->add_option("--seed", train_args.seed, "Override the seed");
    train_cmd->add_flag("--no-gfm", train_args.no_gfm, "Disable the global frequency module");
    train_cmd->add_flag("--no-lfm", train_args.no_lfm, "Disable the local frequency module");
    train_cmd->add_option("--lfm-mode", train_args.lfm_mode, "attention | latest | average_pooling")
        ->check(CLI::IsMember({"attention", "latest", "average_pooling"}));
    train_cmd->add_flag("--no-augment", train_args.no_augment, "Disable data augmentation");
    train_cmd->add_flag("--no-mask-last", train_args.no_mask_last, "Do not zero the last point before conditioning");
    train_cmd->add_flag("--plain-elbo", train_args.plain_elbo, "Unweighted ELBO instead of the masked bound");
    train_cmd->add_flag("--quiet", train_args.quiet, "No per-epoch progress");

    ScoreArgs score_args;
    auto* score_cmd = app.add_subcommand("score", "Write one score CSV per input curve");
    score_cmd->add_option("--config", score_args.config, "JSON run configuration");
    score_cmd->add_option("--model", score_args.model, "Trained model file");
    score_cmd->add_option("--data", score_args.data, "Directory of CSVs to score");
    score_cmd->add_option("--out", score_args.out, "Output directory");
    score_cmd->add_option("--seed", score_args.seed, "Override the scoring seed");
    score_cmd->add_option("--mcmc-steps", score_args.mcmc_steps, "Imputation refinement steps");
    score_cmd->add_option("--score-samples", score_args.score_samples, "Decoder samples per score");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Best F1 and delay F1 of a directory of score CSVs");
    eval_cmd->add_option("--config", eval_args.config, "JSON run configuration (delay, per_curve)");
    eval_cmd->add_option("--scores", eval_args.scores, "Directory of score CSVs")->required();
    eval_cmd->add_option("--delay", eval_args.delay, "Maximum detection delay in points (default 7)");
    eval_cmd->add_option("--out", eval_args.out, "Report JSON (stdout if omitted)");
    eval_cmd->add_flag("--no-per-curve", eval_args.no_per_curve, "Only the pooled result");

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "Generate the synthetic benchmark");
    synth_cmd->add_option("--out", synth_args.out, "Output directory")->required();
    synth_cmd->add_option("--curves", synth_args.config.curves, "Number of curves")->capture_default_str();
    synth_cmd->add_option("--length", synth_args.config.length, "Points per curve")->capture_default_str();
    synth_cmd->add_option("--anomaly-rate", synth_args.config.anomaly_rate, "Fraction of anomalous points")
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth_args.config.seed, "Seed")->capture_default_str();

    PlotArgs plot_args;
    auto* plot_cmd = app.add_subcommand("plot", "Render a score CSV as SVG");
    plot_cmd->add_option("--scores", plot_args.scores, "Score CSV")->required();
    plot_cmd->add_option("--out", plot_args.out, "SVG file")->required();
    plot_cmd->add_option("--data", plot_args.data, "Matching data CSV for the value trace");
    plot_cmd->add_option("--threshold", plot_args.threshold, "Horizontal threshold line");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*train_cmd) return cmd_train(train_args);
        if (*score_cmd) return cmd_score(score_args);
        if (*eval_cmd) return cmd_eval(eval_args);
        if (*synth_cmd) return cmd_synth(synth_args);
        if (*plot_cmd) return cmd_plot(plot_args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kNumeric;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    }
    return kConfig;
}
