#include "scr/config.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "scr/errors.hpp"
#include "scr/rng.hpp"

namespace scr {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') throw ConfigError("config: " + key + " expects a number, got `" + value + "`");
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    const unsigned long long v = std::strtoull(begin, &end, 10);
    if (end == begin || *end != '\0') {
        throw ConfigError("config: " + key + " expects a non-negative integer, got `" + value + "`");
    }
    return static_cast<std::uint64_t>(v);
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    return static_cast<std::size_t>(parse_u64(key, value));
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config: " + key + " expects true/false, got `" + value + "`");
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Ablation ablation_from_mode(const std::string& mode) {
    if (mode == "scr") return Ablation::Full;
    if (mode == "scr-no-fc") return Ablation::NoCorruption;
    if (mode == "scr-selfsup") return Ablation::SelfSupervisedPairs;
    if (mode == "baseline-mlp") return Ablation::BaselineMlp;
    throw ConfigError("config: unknown mode `" + mode +
                      "` (expected scr, scr-no-fc, scr-selfsup, or baseline-mlp)");
}

TrainPlan RunConfig::resolved_plan() const {
    TrainPlan out = plan;
    out.seed = seed;
    out.ablation = ablation_from_mode(mode);
    return out;
}

ImportanceConfig RunConfig::resolved_importance() const {
    ImportanceConfig out = importance;
    out.master_seed = derive_seed(seed, "importance");
    return out;
}

SynthSpec RunConfig::synth_spec() const {
    if (synth_n_informative == 0 || synth_n_informative > synth_n_features) {
        throw ConfigError("config: synth.n_informative must be in 1..synth.n_features");
    }
    SynthSpec spec;
    spec.n_samples = synth_n_samples;
    spec.n_features = synth_n_features;
    spec.noise_std = synth_noise_std;
    spec.nonlinear = synth_nonlinear;
    spec.seed = seed;
    Rng rng(derive_seed(seed, "synth.indices"));
    spec.informative_indices = rng.sample_without_replacement(synth_n_features, synth_n_informative);
    std::sort(spec.informative_indices.begin(), spec.informative_indices.end());
    return spec;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "mode", "seed", "data", "checkpoint", "report_dir",
        "synth.n_samples", "synth.n_features", "synth.n_informative", "synth.noise_std",
        "synth.nonlinear", "synth.out",
        "pretrain.batch_size", "pretrain.corruption_rate", "pretrain.temperature", "pretrain.theta",
        "pretrain.lr", "pretrain.patience", "pretrain.max_epochs", "pretrain.aggregate",
        "finetune.batch_size", "finetune.lr", "finetune.patience", "finetune.max_epochs",
        "importance.group_size", "importance.n_permutations", "importance.retrain",
        "importance.workers",
    };
    return keys;
}

void apply_key(RunConfig& config, const std::string& key, const std::string& value) {
    if (key == "mode") {
        ablation_from_mode(value);  // validate eagerly
        config.mode = value;
    } else if (key == "seed") {
        config.seed = parse_u64(key, value);
    } else if (key == "data") {
        config.data = value;
    } else if (key == "checkpoint") {
        config.checkpoint = value;
    } else if (key == "report_dir") {
        config.report_dir = value;
    } else if (key == "synth.n_samples") {
        config.synth_n_samples = parse_size(key, value);
    } else if (key == "synth.n_features") {
        config.synth_n_features = parse_size(key, value);
    } else if (key == "synth.n_informative") {
        config.synth_n_informative = parse_size(key, value);
    } else if (key == "synth.noise_std") {
        config.synth_noise_std = parse_double(key, value);
        if (config.synth_noise_std < 0.0) throw ConfigError("config: synth.noise_std must be >= 0");
    } else if (key == "synth.nonlinear") {
        config.synth_nonlinear = parse_bool(key, value);
    } else if (key == "synth.out") {
        config.synth_out = value;
    } else if (key == "pretrain.batch_size") {
        config.plan.pretrain.batch_size = parse_size(key, value);
    } else if (key == "pretrain.corruption_rate") {
        config.plan.pretrain.corruption_rate = parse_double(key, value);
    } else if (key == "pretrain.temperature") {
        config.plan.pretrain.temperature = parse_double(key, value);
    } else if (key == "pretrain.theta") {
        config.plan.pretrain.theta = parse_double(key, value);
    } else if (key == "pretrain.lr") {
        config.plan.pretrain.learning_rate = parse_double(key, value);
    } else if (key == "pretrain.patience") {
        config.plan.pretrain.patience = parse_size(key, value);
    } else if (key == "pretrain.max_epochs") {
        config.plan.pretrain.max_epochs = parse_size(key, value);
    } else if (key == "pretrain.aggregate") {
        if (value == "mean") {
            config.plan.pretrain.aggregate = SupconAggregate::Mean;
        } else if (value == "sum") {
            config.plan.pretrain.aggregate = SupconAggregate::Sum;
        } else {
            throw ConfigError("config: pretrain.aggregate expects mean or sum, got `" + value + "`");
        }
    } else if (key == "finetune.batch_size") {
        config.plan.finetune.batch_size = parse_size(key, value);
    } else if (key == "finetune.lr") {
        config.plan.finetune.learning_rate = parse_double(key, value);
    } else if (key == "finetune.patience") {
        config.plan.finetune.patience = parse_size(key, value);
    } else if (key == "finetune.max_epochs") {
        config.plan.finetune.max_epochs = parse_size(key, value);
    } else if (key == "importance.group_size") {
        config.importance.group_size = parse_size(key, value);
    } else if (key == "importance.n_permutations") {
        config.importance.n_permutations = parse_size(key, value);
    } else if (key == "importance.retrain") {
        config.importance.retrain = parse_bool(key, value);
    } else if (key == "importance.workers") {
        config.importance.workers = parse_size(key, value);
        if (config.importance.workers == 0) throw ConfigError("config: importance.workers must be >= 1");
    } else {
        throw ConfigError("config: unknown key `" + key + "`");
    }
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string trimmed = trim(line);
        if (trimmed.empty()) continue;
        const std::size_t eq = trimmed.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: line " + std::to_string(line_no) + " of " + path +
                              " is not `key = value`");
        }
        pairs.emplace_back(trim(trimmed.substr(0, eq)), trim(trimmed.substr(eq + 1)));
    }
    return pairs;
}

std::string render_config(const RunConfig& config) {
    std::string out;
    const auto add = [&out](const std::string& key, const std::string& value) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    };
    add("mode", config.mode);
    add("seed", std::to_string(config.seed));
    add("data", config.data);
    add("checkpoint", config.checkpoint);
    add("report_dir", config.report_dir);
    add("synth.n_samples", std::to_string(config.synth_n_samples));
    add("synth.n_features", std::to_string(config.synth_n_features));
    add("synth.n_informative", std::to_string(config.synth_n_informative));
    add("synth.noise_std", format_double(config.synth_noise_std));
    add("synth.nonlinear", config.synth_nonlinear ? "true" : "false");
    add("synth.out", config.synth_out);
    add("pretrain.batch_size", std::to_string(config.plan.pretrain.batch_size));
    add("pretrain.corruption_rate", format_double(config.plan.pretrain.corruption_rate));
    add("pretrain.temperature", format_double(config.plan.pretrain.temperature));
    add("pretrain.theta", format_double(config.plan.pretrain.theta));
    add("pretrain.lr", format_double(config.plan.pretrain.learning_rate));
    add("pretrain.patience", std::to_string(config.plan.pretrain.patience));
    add("pretrain.max_epochs", std::to_string(config.plan.pretrain.max_epochs));
    add("pretrain.aggregate",
        config.plan.pretrain.aggregate == SupconAggregate::Mean ? "mean" : "sum");
    add("finetune.batch_size", std::to_string(config.plan.finetune.batch_size));
    add("finetune.lr", format_double(config.plan.finetune.learning_rate));
    add("finetune.patience", std::to_string(config.plan.finetune.patience));
    add("finetune.max_epochs", std::to_string(config.plan.finetune.max_epochs));
    add("importance.group_size", std::to_string(config.importance.group_size));
    add("importance.n_permutations", std::to_string(config.importance.n_permutations));
    add("importance.retrain", config.importance.retrain ? "true" : "false");
    add("importance.workers", std::to_string(config.importance.workers));
    return out;
}

}  // namespace scr
