// Command-line front end for the SCR tabular-regression toolkit.
//
// Subcommands: synth, train, evaluate, ensemble, importance, sweep, gradcheck.
// Configuration is flat `key = value` text; every key is also a flag
// (`pretrain.batch_size` -> `--pretrain.batch-size`). Precedence, lowest
// first: built-in defaults, SCR_SEED, --config file, explicit flags.
//
// Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numeric error.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scr/config.hpp"
#include "scr/data.hpp"
#include "scr/errors.hpp"
#include "scr/gradcheck.hpp"
#include "scr/interpret.hpp"
#include "scr/metrics.hpp"
#include "scr/pipeline.hpp"

namespace {

using scr::RunConfig;

std::string flag_name(const std::string& key) {
    std::string flag = "--" + key;
    bool past_dot = key.find('.') == std::string::npos;
    for (char& c : flag) {
        if (c == '.') past_dot = true;
        if (past_dot && c == '_') c = '-';
    }
    return flag;
}

// Registers one option per config key on a subcommand; values arrive as text
// and go through the same validation as config-file entries.
std::map<std::string, std::string>* add_config_flags(CLI::App* cmd) {
    auto* values = new std::map<std::string, std::string>();
    for (const std::string& key : scr::config_keys()) {
        cmd->add_option_function<std::string>(
            flag_name(key), [values, key](const std::string& v) { (*values)[key] = v; },
            "config key " + key);
    }
    return values;
}

RunConfig resolve_config(const std::optional<std::string>& config_path,
                         const std::map<std::string, std::string>& flags) {
    RunConfig config;
    if (const char* env_seed = std::getenv("SCR_SEED")) {
        scr::apply_key(config, "seed", env_seed);
    }
    if (config_path) {
        for (const auto& [key, value] : scr::read_config_file(*config_path)) {
            scr::apply_key(config, key, value);
        }
    }
    for (const auto& [key, value] : flags) {
        scr::apply_key(config, key, value);
    }
    return config;
}

void require(bool ok, const std::string& message) {
    if (!ok) throw scr::ConfigError(message);
}

std::string format17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void print_metrics(const scr::EvalResult& result) {
    std::printf("pearson_r=%s, mse=%s, n=%zu\n", format17(result.pearson_r).c_str(),
                format17(result.mse).c_str(), result.n);
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw scr::DataError("cannot write " + path);
    out << content;
}

// Trains per config and evaluates on the held-out test split.
struct TrainRun {
    scr::TrainOutcome outcome;
    scr::SplitIndices split;
    scr::EvalResult test_metrics;
};

TrainRun run_training(const RunConfig& config, const scr::Dataset& dataset) {
    TrainRun run;
    run.split = scr::split(dataset.n_rows(), config.seed);
    run.outcome = scr::train_scr(dataset, run.split, config.resolved_plan());
    const scr::Dataset standardized = scr::apply(run.outcome.bundle.standardizer, dataset);
    const scr::Dataset test = scr::take_rows(standardized, run.split.test);
    run.test_metrics = scr::evaluate(scr::predict(run.outcome.bundle, test), test.labels);
    return run;
}

// Report files deliberately carry no timestamps or wall-clock figures so that
// reruns with identical seeds are byte-identical.
void write_train_reports(const RunConfig& config, const TrainRun& run) {
    if (config.report_dir.empty()) return;
    std::filesystem::create_directories(config.report_dir);
    const auto in_dir = [&](const std::string& name) {
        return (std::filesystem::path(config.report_dir) / name).string();
    };
    scr::save_train_report_csv(run.outcome.report, in_dir("train_report.csv"));
    write_text(in_dir("config_resolved.txt"), scr::render_config(config));
    write_text(in_dir("metrics.csv"),
               "pearson_r,mse,n\n" + format17(run.test_metrics.pearson_r) + "," +
                   format17(run.test_metrics.mse) + "," + std::to_string(run.test_metrics.n) + "\n");
    std::string md;
    md += "# Training run\n\n";
    md += "- mode: " + config.mode + "\n";
    md += "- seed: " + std::to_string(config.seed) + "\n";
    md += "- data: " + config.data + "\n";
    md += "- rows: train " + std::to_string(run.split.train.size()) + ", val " +
          std::to_string(run.split.val.size()) + ", test " + std::to_string(run.split.test.size()) +
          "\n";
    if (run.outcome.report.pretrain_stop_epoch > 0) {
        md += "- pretrain: stopped after epoch " +
              std::to_string(run.outcome.report.pretrain_stop_epoch) + ", best epoch " +
              std::to_string(run.outcome.report.pretrain_best_epoch) + "\n";
    }
    md += "- finetune: stopped after epoch " + std::to_string(run.outcome.report.finetune_stop_epoch) +
          ", best epoch " + std::to_string(run.outcome.report.finetune_best_epoch) + "\n";
    md += "- test pearson_r: " + format17(run.test_metrics.pearson_r) + "\n";
    md += "- test mse: " + format17(run.test_metrics.mse) + "\n";
    write_text(in_dir("summary.md"), md);
}

int cmd_synth(const RunConfig& config) {
    require(!config.synth_out.empty(), "synth: set synth.out (or --synth.out) to the output CSV path");
    const scr::SynthResult result = scr::generate_synthetic(config.synth_spec());
    scr::save_csv(result.dataset, config.synth_out);
    scr::save_ground_truth(result.truth, config.synth_n_features, config.synth_out + ".truth.csv");
    std::printf("wrote %s (%zu rows, %zu features) and %s\n", config.synth_out.c_str(),
                result.dataset.n_rows(), result.dataset.n_features(),
                (config.synth_out + ".truth.csv").c_str());
    return 0;
}

int cmd_train(const RunConfig& config) {
    require(!config.data.empty(), "train: set data (or --data) to the dataset CSV path");
    const scr::Dataset dataset = scr::load_csv(config.data);
    const TrainRun run = run_training(config, dataset);
    if (!config.checkpoint.empty()) scr::save_bundle(run.outcome.bundle, config.checkpoint);
    write_train_reports(config, run);
    print_metrics(run.test_metrics);
    return 0;
}

int cmd_evaluate(const RunConfig& config) {
    require(!config.checkpoint.empty(), "evaluate: set checkpoint (or --checkpoint)");
    require(!config.data.empty(), "evaluate: set data (or --data)");
    const scr::ModelBundle bundle = scr::load_bundle(config.checkpoint);
    const scr::Dataset dataset = scr::load_csv(config.data);
    const scr::Dataset standardized = scr::apply(bundle.standardizer, dataset);
    const scr::EvalResult result =
        scr::evaluate(scr::predict(bundle, standardized), standardized.labels);
    print_metrics(result);
    return 0;
}

int cmd_ensemble(const std::vector<std::string>& checkpoints, const std::vector<std::string>& datasets) {
    require(!checkpoints.empty(), "ensemble: give at least one --checkpoint");
    require(checkpoints.size() == datasets.size(), "ensemble: need exactly one --data per --checkpoint");
    std::vector<scr::ModelBundle> bundles;
    std::vector<scr::Dataset> standardized;
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        bundles.push_back(scr::load_bundle(checkpoints[i]));
        standardized.push_back(scr::apply(bundles.back().standardizer, scr::load_csv(datasets[i])));
    }
    const std::vector<double> mean = scr::ensemble_predict(bundles, standardized);
    const scr::EvalResult result = scr::evaluate(mean, standardized.front().labels);
    print_metrics(result);
    return 0;
}

int cmd_importance(const RunConfig& config) {
    require(!config.data.empty(), "importance: set data (or --data)");
    const scr::Dataset dataset = scr::load_csv(config.data);
    const scr::SplitIndices idx = scr::split(dataset.n_rows(), config.seed);
    const scr::ImportanceReport report =
        scr::run_importance(dataset, idx, config.resolved_plan(), config.resolved_importance());

    std::string out_path = "importance.csv";
    if (!config.report_dir.empty()) {
        std::filesystem::create_directories(config.report_dir);
        out_path = (std::filesystem::path(config.report_dir) / "importance.csv").string();
        write_text((std::filesystem::path(config.report_dir) / "config_resolved.txt").string(),
                   scr::render_config(config));
        std::string md = "# Permutation importance\n\n";
        md += "- baseline_r: " + format17(report.baseline_r) + "\n";
        md += "- group size: " + std::to_string(report.group_size) + "\n";
        md += "- completed permutations: " + std::to_string(report.completed_permutations) + "\n";
        md += "- failed permutations: " + std::to_string(report.failed_permutations) + "\n\n";
        md += "Top 10 features by mean decrease in test r:\n\n";
        md += "| feature | mean delta r | inclusions |\n|---|---|---|\n";
        for (std::size_t i = 0; i < report.scores.size() && i < 10; ++i) {
            const scr::FeatureScore& s = report.scores[i];
            md += "| " + s.feature_name + " | " + format17(s.mean_delta_r) + " | " +
                  std::to_string(s.inclusion_count) + " |\n";
        }
        write_text((std::filesystem::path(config.report_dir) / "summary.md").string(), md);
    }
    scr::save_importance_csv(report, out_path);
    std::printf("baseline_r=%s, completed=%zu, failed=%zu, report=%s\n",
                format17(report.baseline_r).c_str(), report.completed_permutations,
                report.failed_permutations, out_path.c_str());
    return 0;
}

int cmd_sweep(const RunConfig& config, const std::string& key, const std::string& values_csv) {
    static const std::vector<std::string> sweepable = {"pretrain.batch_size", "pretrain.corruption_rate",
                                                       "pretrain.temperature", "pretrain.theta", "seed"};
    require(std::find(sweepable.begin(), sweepable.end(), key) != sweepable.end(),
            "sweep: key must be one of pretrain.batch_size, pretrain.corruption_rate, "
            "pretrain.temperature, pretrain.theta, seed");
    require(!config.data.empty(), "sweep: set data (or --data)");
    require(!values_csv.empty(), "sweep: give --values as a comma-separated list");

    std::vector<std::string> values;
    std::string current;
    for (char c : values_csv) {
        if (c == ',') {
            values.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    values.push_back(current);

    const scr::Dataset dataset = scr::load_csv(config.data);
    std::string csv = "value,pearson_r,mse\n";
    std::string md = "# Sweep over " + key + "\n\n| " + key + " | pearson_r | mse |\n|---|---|---|\n";
    std::printf("%-14s %-12s %s\n", key.c_str(), "pearson_r", "mse");
    for (const std::string& value : values) {
        RunConfig point = config;
        scr::apply_key(point, key, value);
        const TrainRun run = run_training(point, dataset);
        const std::string r = format17(run.test_metrics.pearson_r);
        const std::string m = format17(run.test_metrics.mse);
        csv += value + "," + r + "," + m + "\n";
        md += "| " + value + " | " + r + " | " + m + " |\n";
        std::printf("%-14s %-12.6f %.6f\n", value.c_str(), run.test_metrics.pearson_r,
                    run.test_metrics.mse);
    }
    if (!config.report_dir.empty()) {
        std::filesystem::create_directories(config.report_dir);
        write_text((std::filesystem::path(config.report_dir) / ("sweep_" + key + ".csv")).string(), csv);
        write_text((std::filesystem::path(config.report_dir) / "config_resolved.txt").string(),
                   scr::render_config(config));
        write_text((std::filesystem::path(config.report_dir) / "summary.md").string(), md);
    }
    return 0;
}

int cmd_gradcheck(const RunConfig& config, double perturb) {
    const scr::GradCheckOutcome outcome = scr::run_gradcheck(config.seed, perturb);
    std::printf("mse path: max relative error %s (threshold %g)\n",
                format17(outcome.mse_path.max_rel_error).c_str(), outcome.threshold);
    std::printf("scr path: max relative error %s (threshold %g)\n",
                format17(outcome.scr_path.max_rel_error).c_str(), outcome.threshold);
    if (!outcome.passed()) {
        std::fprintf(stderr, "gradcheck: FAILED\n");
        return 4;
    }
    std::printf("gradcheck: OK\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Supervised contrastive regression toolkit for tabular data"};
    app.require_subcommand(1);

    std::optional<std::string> config_path;

    struct SubcommandState {
        CLI::App* cmd = nullptr;
        std::map<std::string, std::string>* flags = nullptr;
    };
    const auto make_subcommand = [&](const std::string& name, const std::string& desc) {
        SubcommandState state;
        state.cmd = app.add_subcommand(name, desc);
        state.cmd->add_option("--config", config_path, "flat key = value config file");
        state.flags = add_config_flags(state.cmd);
        return state;
    };

    const SubcommandState synth =
        make_subcommand("synth", "generate a synthetic dataset with known ground truth");
    const SubcommandState train = make_subcommand("train", "train a model and report test metrics");
    const SubcommandState evaluate = make_subcommand("evaluate", "evaluate a checkpoint on a dataset");
    // ensemble takes only the checkpoint/dataset lists; no config keys apply.
    CLI::App* ensemble_cmd = app.add_subcommand("ensemble", "average predictions of several checkpoints");
    std::vector<std::string> ensemble_checkpoints, ensemble_datasets;
    ensemble_cmd->add_option("--checkpoint", ensemble_checkpoints, "checkpoint file (repeatable)");
    ensemble_cmd->add_option("--data", ensemble_datasets, "dataset CSV aligned by row (repeatable)");
    const SubcommandState importance =
        make_subcommand("importance", "grouped permutation feature importance");
    const SubcommandState sweep = make_subcommand("sweep", "train across values of one hyperparameter");
    std::string sweep_key, sweep_values;
    sweep.cmd->add_option("--key", sweep_key, "hyperparameter to sweep")->required();
    sweep.cmd->add_option("--values", sweep_values, "comma-separated values")->required();
    const SubcommandState gradcheck =
        make_subcommand("gradcheck", "finite-difference check of both loss paths");
    double gradcheck_perturb = 0.0;
    gradcheck.cmd->add_option("--perturb", gradcheck_perturb,
                              "test hook: offset added to one analytic gradient component");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        app.exit(e);
        return 2;
    }

    try {
        if (synth.cmd->parsed()) return cmd_synth(resolve_config(config_path, *synth.flags));
        if (train.cmd->parsed()) return cmd_train(resolve_config(config_path, *train.flags));
        if (evaluate.cmd->parsed()) return cmd_evaluate(resolve_config(config_path, *evaluate.flags));
        if (ensemble_cmd->parsed()) return cmd_ensemble(ensemble_checkpoints, ensemble_datasets);
        if (importance.cmd->parsed()) {
            return cmd_importance(resolve_config(config_path, *importance.flags));
        }
        if (sweep.cmd->parsed()) {
            return cmd_sweep(resolve_config(config_path, *sweep.flags), sweep_key, sweep_values);
        }
        if (gradcheck.cmd->parsed()) {
            return cmd_gradcheck(resolve_config(config_path, *gradcheck.flags), gradcheck_perturb);
        }
    } catch (const scr::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        switch (e.kind()) {
            case scr::ErrorKind::Config:
            case scr::ErrorKind::Contract:
                return 2;
            case scr::ErrorKind::Data:
                return 3;
            case scr::ErrorKind::Numeric:
                return 4;
        }
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
    return 2;
}
