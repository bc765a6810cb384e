#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "scr/data.hpp"
#include "scr/interpret.hpp"
#include "scr/pipeline.hpp"

namespace scr {

// Flat `key = value` run configuration. Every tunable of the toolkit appears
// as a dotted key; unknown keys are rejected before any computation starts.
struct RunConfig {
    std::string mode = "scr";  // scr | scr-no-fc | scr-selfsup | baseline-mlp
    std::uint64_t seed = 1;
    std::string data;
    std::string checkpoint;
    std::string report_dir;

    std::size_t synth_n_samples = 2000;
    std::size_t synth_n_features = 100;
    std::size_t synth_n_informative = 10;
    double synth_noise_std = 0.5;
    bool synth_nonlinear = true;
    std::string synth_out;

    TrainPlan plan;  // plan.ablation is derived from `mode` on demand
    ImportanceConfig importance;

    TrainPlan resolved_plan() const;        // plan with ablation + seed filled in
    ImportanceConfig resolved_importance() const;
    SynthSpec synth_spec() const;           // informative indices drawn from the seed
};

// All recognized keys, in canonical order.
const std::vector<std::string>& config_keys();

// Applies one key/value pair; throws ConfigError on unknown keys or bad values.
void apply_key(RunConfig& config, const std::string& key, const std::string& value);

// Reads a `key = value` file (# comments, blank lines allowed).
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

// Fully-resolved dump, one key per line, suitable for echoing into reports.
std::string render_config(const RunConfig& config);

Ablation ablation_from_mode(const std::string& mode);

}  // namespace scr
