#pragma once

#include <optional>
#include <string>
#include <vector>

#include "saia/core.hpp"
#include "saia/fusion.hpp"
#include "saia/gbdt.hpp"

namespace saia {

enum class Route { KeepOnClient, SendToServer };

struct RoutingDecision {
    Route route = Route::KeepOnClient;
    double du_score = 0.0;
};

/// Embedded-AI soft probabilities for one sample plus its keep/send label
/// (0 = keep on client, 1 = send to server).
struct MetaRecord {
    std::string id;
    PosteriorVector meta;
    std::optional<int> routing_label;
};

struct DuConfig {
    double epsilon = 1.0;
    double threshold = 0.5;
    TrainConfig train;
    /// Jittered copies per record added before training (0 disables).
    int jitter_copies = 0;
    double jitter_sigma = 0.01;

    void validate() const;
};

/// 1 iff the two predictions differ and the networked one is correct.
int label_rule(int embedded_pred, int networked_pred, int true_label);

Route oracle_route(int embedded_pred, int networked_pred, int true_label);

std::vector<MetaRecord> generate_meta(const GbdtModel& embedded, const Ensemble& ensemble, const Dataset& meta_ds);

/// Copies of each record with N(0, sigma^2) noise on the probabilities,
/// clamped at zero and renormalized.
std::vector<MetaRecord> jitter_meta(const std::vector<MetaRecord>& records, int copies, double sigma,
                                    std::uint64_t seed);

/// Binary logistic GBDT on the meta probabilities, positives scaled by epsilon.
GbdtModel train_du(const std::vector<MetaRecord>& records, const DuConfig& cfg);

double du_score(const GbdtModel& du, const PosteriorVector& meta);

RoutingDecision route(const GbdtModel& du, const PosteriorVector& meta, bool comm_available, double threshold);

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    double tpr() const { return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
    double fnr() const { return tp + fn ? static_cast<double>(fn) / static_cast<double>(tp + fn) : 0.0; }
    double fpr() const { return fp + tn ? static_cast<double>(fp) / static_cast<double>(fp + tn) : 0.0; }
    double tnr() const { return fp + tn ? static_cast<double>(tn) / static_cast<double>(fp + tn) : 0.0; }
};

/// Tallies routing decisions (true = send) against routing labels.
Confusion tally_confusion(std::span<const char> sent, std::span<const int> labels);

/// Routes every labeled record at threshold tau with communication available.
Confusion du_confusion(const GbdtModel& du, const std::vector<MetaRecord>& records, double threshold);

std::string meta_records_to_csv(const std::vector<MetaRecord>& records);
std::vector<MetaRecord> parse_meta_records(const std::string& text);
void save_meta_records(const std::vector<MetaRecord>& records, const std::string& path);
std::vector<MetaRecord> load_meta_records(const std::string& path);

}  // namespace saia
