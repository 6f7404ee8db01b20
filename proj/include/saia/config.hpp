#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "saia/core.hpp"
#include "saia/decision_unit.hpp"
#include "saia/gbdt.hpp"
#include "saia/pipeline.hpp"
#include "saia/preprocess.hpp"
#include "saia/synthetic.hpp"

namespace saia {

enum class DataSource { Synthetic, Images };

struct ImageSource {
    /// CSV `path,label` of PPM images; relative paths resolve against its directory.
    std::string list;
    int classes = 2;
    /// Extra copies of training images.
    std::vector<AugmentOp> augment;
};

struct ServerConfig {
    int models = 3;
    bool bootstrap = true;
    TrainConfig train;
    /// Precomputed posterior CSV; when set no server models are trained.
    std::string tables;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    DataSource source = DataSource::Synthetic;
    SyntheticConfig synthetic;
    ImageSource images;
    FeatureConfig features;
    SplitSpec split{0.5, 0.25, 0.25, 0};
    TrainConfig embedded;
    ServerConfig server;
    DuConfig du;
    RunConfig run;
    std::vector<double> epsilons{0, 1, 2, 3, 5, 10, 25, 50, 100};
    int baseline_trials = 100;
    /// Empty: use the fraction_sent values of the sweep.
    std::vector<double> baseline_fractions;

    void validate() const;
};

/// Parses the JSON config; `overrides` are `dotted.key=value` with JSON values
/// (bare words are taken as strings). Unknown keys are a ConfigError.
ExperimentConfig parse_config(const std::string& json_text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Canonical JSON of the resolved config (sorted keys, every field present).
std::string config_to_json(const ExperimentConfig& cfg);

/// FNV-1a of config_to_json.
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace saia
