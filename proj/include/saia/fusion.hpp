#pragma once

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "saia/core.hpp"
#include "saia/gbdt.hpp"

namespace saia {

/// k x m matrix of per-classifier posteriors for one sample.
class DecisionMatrix {
public:
    DecisionMatrix(std::vector<PosteriorVector> rows, std::vector<std::string> classifier_ids = {});

    std::size_t classifiers() const noexcept { return rows_.size(); }
    std::size_t classes() const noexcept { return rows_.front().size(); }
    const PosteriorVector& row(std::size_t i) const { return rows_[i]; }
    const std::vector<std::string>& classifier_ids() const noexcept { return ids_; }

private:
    std::vector<PosteriorVector> rows_;
    std::vector<std::string> ids_;
};

/// Non-negative per-classifier weights, not all zero. They need not sum to one.
class FusionWeights {
public:
    explicit FusionWeights(std::vector<double> weights);
    static FusionWeights uniform(std::size_t k);

    std::size_t size() const noexcept { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }
    std::span<const double> values() const noexcept { return w_; }

private:
    std::vector<double> w_;
};

/// Class-wise weighted sum of posteriors: score[c] = sum_i w[i] * p_i[c].
std::vector<double> fuse(const DecisionMatrix& dm, const FusionWeights& w);

/// Index of the largest fused score, lowest index on ties.
int decide(std::span<const double> scores);

/// Precomputed posteriors of one exported classifier, keyed by sample id.
class PosteriorTable {
public:
    PosteriorTable(std::string model_name, int class_count);

    void insert(const std::string& id, PosteriorVector probs);
    const PosteriorVector* find(const std::string& id) const;

    const std::string& model_name() const noexcept { return name_; }
    int class_count() const noexcept { return class_count_; }
    std::size_t size() const noexcept { return rows_.size(); }
    const std::map<std::string, PosteriorVector>& rows() const noexcept { return rows_; }

private:
    std::string name_;
    int class_count_;
    std::map<std::string, PosteriorVector> rows_;
};

/// Reads `id,model,p0,...,p{m-1}`; one table per distinct model name, in
/// order of first appearance. Rows whose sum is off by more than 1e-3 are rejected.
std::vector<PosteriorTable> load_posterior_tables(const std::string& path);
std::vector<PosteriorTable> parse_posterior_tables(const std::string& text);
std::string posterior_tables_to_csv(std::span<const PosteriorTable> tables);

/// One member of the networked ensemble: an exported table or a local model.
class ClassifierOracle {
public:
    ClassifierOracle(std::string name, PosteriorTable table);
    ClassifierOracle(std::string name, GbdtModel model);

    const std::string& name() const noexcept { return name_; }
    int class_count() const;
    bool is_table() const noexcept { return std::holds_alternative<PosteriorTable>(source_); }

    /// Table oracles answer by id, model oracles by features.
    PosteriorVector query(const Sample& sample) const;

private:
    std::string name_;
    std::variant<PosteriorTable, GbdtModel> source_;
};

ClassifierOracle load_posterior_table(const std::string& path);

struct EnsemblePrediction {
    std::vector<double> scores;
    int label = 0;
};

class Ensemble {
public:
    /// Uniform 1/k weights when `weights` is empty.
    Ensemble(std::vector<ClassifierOracle> oracles, std::vector<double> weights = {});

    std::size_t size() const noexcept { return oracles_.size(); }
    int class_count() const noexcept { return class_count_; }
    const FusionWeights& weights() const noexcept { return weights_; }
    const std::vector<ClassifierOracle>& oracles() const noexcept { return oracles_; }

    DecisionMatrix decision_matrix(const Sample& sample) const;

private:
    std::vector<ClassifierOracle> oracles_;
    FusionWeights weights_;
    int class_count_;
};

EnsemblePrediction ensemble_predict(const Ensemble& ensemble, const Sample& sample);

/// JSON manifest: {"oracles":[{"name":..,"table":path[,"model_name":..]} | {"name":..,"model":path}],
/// "weights":[...]}. Relative paths resolve against the manifest's directory.
Ensemble load_ensemble_manifest(const std::string& path);

}  // namespace saia
