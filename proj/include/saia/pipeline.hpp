#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "saia/core.hpp"
#include "saia/decision_unit.hpp"
#include "saia/gbdt.hpp"
#include "saia/transport.hpp"

namespace saia {

/// Modeled per-sample latency of the two sides.
struct CostModel {
    double t_client = 0.308;
    double t_server = 2.51;

    void validate() const;
    double elapsed(double fraction_sent) const { return (1.0 - fraction_sent) * t_client + fraction_sent * t_server; }
};

struct RunConfig {
    bool comm_available = true;
    double threshold = 0.5;
    CostModel cost;
    std::uint64_t seed = 0;
    /// Socket transport when set, in-process otherwise.
    std::optional<Endpoint> endpoint;
    /// Keep a sample on the client when its request fails instead of invalidating the run.
    bool fallback_on_failure = false;

    void validate() const;
};

struct SweepRecord {
    double epsilon = std::numeric_limits<double>::quiet_NaN();
    double fraction_sent = 0.0;
    double accuracy = 0.0;
    double tpr = std::numeric_limits<double>::quiet_NaN();
    double fpr = std::numeric_limits<double>::quiet_NaN();
    double elapsed_per_sample = 0.0;
};

struct SampleOutcome {
    std::string id;
    int true_label = 0;
    int embedded_pred = 0;
    RoutingDecision decision;
    /// Set when the sample went to the server.
    std::optional<EnsemblePrediction> networked;
    int final_pred = 0;
};

struct RunResult {
    std::vector<SampleOutcome> outcomes;
    SweepRecord record;
    bool valid = true;
    std::string error;
};

using Router = std::function<RoutingDecision(const PosteriorVector& meta, bool comm_available)>;

Router du_router(const GbdtModel& du, double threshold);
Router always_send_router();

/// Client loop: embedded prediction, routing, then the networked answer for sent samples.
/// `routing_labels` (by sample id) enables TPR/FPR; otherwise they stay NaN.
RunResult run_split(const Dataset& test, const GbdtModel& embedded, const Router& router, EnsembleClient& client,
                    const RunConfig& cfg, const std::unordered_map<std::string, int>* routing_labels = nullptr);

RunResult run_split(const Dataset& test, const GbdtModel& embedded, const GbdtModel& du, EnsembleClient& client,
                    const RunConfig& cfg, const std::unordered_map<std::string, int>* routing_labels = nullptr);

double embedded_accuracy(const Dataset& test, const GbdtModel& embedded);
double networked_accuracy(const Dataset& test, EnsembleClient& client);

struct SweepInputs {
    const Dataset& test;
    const GbdtModel& embedded;
    /// DU training data.
    const std::vector<MetaRecord>& meta_train;
    /// Meta records of the test samples; their labels drive TPR/FPR.
    const std::vector<MetaRecord>& meta_test;
};

/// Retrains the DU for each epsilon from the same records; per-epsilon seeds
/// derive from the DU train seed.
std::vector<SweepRecord> epsilon_sweep(const std::vector<double>& eps_grid, const SweepInputs& inputs,
                                       const DuConfig& du_cfg, EnsembleClient& client, const RunConfig& cfg,
                                       std::vector<GbdtModel>* trained_dus = nullptr);

struct BaselineResult {
    double fraction = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
    int trials = 0;
};

/// Sends a uniformly random round(f * n) subset per trial; sample standard deviation.
BaselineResult random_baseline(const Dataset& test, const GbdtModel& embedded, EnsembleClient& client,
                               double fraction, int trials, std::uint64_t seed);

/// Same, with embedded and networked predictions already computed.
BaselineResult random_baseline(std::span<const int> truth, std::span<const int> embedded_pred,
                               std::span<const int> networked_pred, double fraction, int trials, std::uint64_t seed);

/// epsilon,fraction_sent,accuracy,tpr,fpr,elapsed_per_sample
std::string sweep_to_csv(const std::vector<SweepRecord>& records);
std::vector<SweepRecord> parse_sweep_csv(const std::string& text);
std::string sweep_summary(const std::vector<SweepRecord>& records);

}  // namespace saia
