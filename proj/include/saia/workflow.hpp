#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "saia/config.hpp"
#include "saia/fusion.hpp"
#include "saia/pipeline.hpp"

namespace saia {

/// File layout of one experiment output directory.
class Workspace {
public:
    explicit Workspace(std::filesystem::path dir);

    const std::filesystem::path& dir() const noexcept { return dir_; }
    std::filesystem::path file(const std::string& name) const { return dir_ / name; }

    std::filesystem::path client() const { return file("client.csv"); }
    std::filesystem::path client_augmented() const { return file("client_aug.csv"); }
    std::filesystem::path strong(int k) const { return file("strong_" + std::to_string(k) + ".csv"); }
    std::filesystem::path train() const { return file("train.csv"); }
    std::filesystem::path meta() const { return file("meta.csv"); }
    std::filesystem::path test() const { return file("test.csv"); }
    std::filesystem::path embedded_model() const { return file("embedded.model"); }
    std::filesystem::path server_model(int k) const { return file("server_" + std::to_string(k) + ".model"); }
    std::filesystem::path posteriors() const { return file("posteriors.csv"); }
    std::filesystem::path ensemble() const { return file("ensemble.json"); }
    std::filesystem::path meta_train() const { return file("meta_train.csv"); }
    std::filesystem::path meta_test() const { return file("meta_test.csv"); }
    std::filesystem::path du_model() const { return file("du.model"); }
    std::filesystem::path run_outcomes() const { return file("run_outcomes.csv"); }
    std::filesystem::path run_record() const { return file("run.csv"); }
    std::filesystem::path sweep() const { return file("sweep.csv"); }
    std::filesystem::path sweep_du(double epsilon) const;
    std::filesystem::path baseline() const { return file("baseline.csv"); }
    std::filesystem::path accuracy() const { return file("accuracy.json"); }
    std::filesystem::path report() const { return file("report.txt"); }
    std::filesystem::path manifest(const std::string& command) const { return file("manifest_" + command + ".json"); }

private:
    std::filesystem::path dir_;
};

/// Files a stage read and wrote.
struct StageIo {
    std::vector<std::filesystem::path> inputs;
    std::vector<std::filesystem::path> outputs;
};

int class_count(const ExperimentConfig& cfg);

StageIo prepare_features(const ExperimentConfig& cfg, const Workspace& ws);
StageIo train_embedded(const ExperimentConfig& cfg, const Workspace& ws);
StageIo export_posteriors(const ExperimentConfig& cfg, const Workspace& ws);
StageIo gen_meta(const ExperimentConfig& cfg, const Workspace& ws);
StageIo train_du_stage(const ExperimentConfig& cfg, const Workspace& ws);

/// Runs the client loop against the configured transport. The returned record
/// is also written to run.csv; outcomes go to run_outcomes.csv.
StageIo run_stage(const ExperimentConfig& cfg, const Workspace& ws, RunResult* result = nullptr);

/// Runs any missing preparation stages first.
StageIo sweep_stage(const ExperimentConfig& cfg, const Workspace& ws);
StageIo baseline_stage(const ExperimentConfig& cfg, const Workspace& ws);
StageIo report_stage(const ExperimentConfig& cfg, const Workspace& ws, std::string* text = nullptr);

/// Config hash, seed, and FNV-1a hashes of every input and output file. No timestamps.
void write_manifest(const ExperimentConfig& cfg, const Workspace& ws, const std::string& command, const StageIo& io);

/// Client for the configured transport: in-process over `ensemble` (required
/// then), or a socket to run.transport.
std::unique_ptr<EnsembleClient> make_client(const ExperimentConfig& cfg, const Ensemble* ensemble);

std::vector<BaselineResult> parse_baseline_csv(const std::string& text);

}  // namespace saia
