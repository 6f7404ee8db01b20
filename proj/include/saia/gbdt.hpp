#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "saia/core.hpp"

namespace saia {

enum class Objective {
    Auto,  // logistic for two classes, softmax otherwise
    Logistic,
    Softmax,
};

struct TrainConfig {
    Objective objective = Objective::Auto;
    int rounds = 100;
    int max_depth = 3;
    double min_child_hessian = 1.0;
    double lambda = 1.0;
    double gamma = 0.0;
    double learning_rate = 0.3;
    /// Gradient/hessian scale for positive samples under the logistic
    /// objective (negatives keep scale 1). Ignored for softmax.
    double epsilon = 1.0;
    double dart_drop_rate = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GradHess {
    double g = 0.0;
    double h = 0.0;
};

inline constexpr double kHessianFloor = 1e-16;

GradHess grad_hess_logistic(int y, double margin, double weight = 1.0);
std::vector<GradHess> grad_hess_softmax(int y, std::span<const double> margins);

double sigmoid(double margin);
std::vector<double> softmax(std::span<const double> margins);

/// Flat pre-order node. Leaves have feature == -1.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

/// Regression tree; a sample goes left when feature < threshold.
class Tree {
public:
    Tree() = default;
    explicit Tree(std::vector<TreeNode> nodes);

    double predict(std::span<const double> features) const;
    std::span<const TreeNode> nodes() const noexcept { return nodes_; }
    double max_abs_leaf() const;
    int depth() const;

    bool operator==(const Tree&) const = default;

private:
    std::vector<TreeNode> nodes_;
};

/// Dense row-major feature view used by the tree builder.
class FeatureMatrix {
public:
    FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static FeatureMatrix from(const Dataset& ds);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double at(std::size_t row, std::size_t col) const { return values_[row * cols_ + col]; }
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> values_;
};

/// Exact greedy second-order tree fit, one gradient per matrix row. Gain of a split is
///   1/2 [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)] - gamma
/// and leaves carry -G/(H+lambda). Candidate thresholds are midpoints between
/// consecutive distinct values; the first maximum in (feature, threshold)
/// ascending order wins.
Tree build_tree(std::span<const GradHess> grads, const FeatureMatrix& features, const TrainConfig& cfg);

/// Additive tree ensemble. Trees are stored round-major: round r, group c is
/// trees()[r * groups() + c], where groups() is 1 for logistic and m for softmax.
class GbdtModel {
public:
    GbdtModel(Objective objective, int class_count, int feature_count, double learning_rate,
              double base_score = 0.0);

    Objective objective() const noexcept { return objective_; }
    int class_count() const noexcept { return class_count_; }
    int feature_count() const noexcept { return feature_count_; }
    int groups() const noexcept { return objective_ == Objective::Logistic ? 1 : class_count_; }
    double learning_rate() const noexcept { return learning_rate_; }
    double base_score() const noexcept { return base_score_; }
    int rounds() const noexcept { return static_cast<int>(trees_.size()) / groups(); }

    std::span<const Tree> trees() const noexcept { return trees_; }
    std::span<const double> scales() const noexcept { return scales_; }

    void add_round(std::vector<Tree> round_trees, double scale = 1.0);
    void rescale_round(int round, double factor);

    /// Raw margins, one per group.
    std::vector<double> margins(std::span<const double> features) const;
    PosteriorVector predict_proba(std::span<const double> features) const;
    PosteriorVector predict_proba(const Sample& sample) const { return predict_proba(sample.features); }
    std::vector<PosteriorVector> predict_proba(const Dataset& ds) const;

    std::string serialize() const;
    static GbdtModel deserialize(const std::string& text);

    bool operator==(const GbdtModel&) const = default;

private:
    Objective objective_;
    int class_count_;
    int feature_count_;
    double learning_rate_;
    double base_score_;
    std::vector<Tree> trees_;
    std::vector<double> scales_;
};

void save_model(const GbdtModel& model, const std::string& path);
GbdtModel load_model(const std::string& path);

/// Called after every boosting round with the model so far.
using RoundObserver = std::function<void(int round, const GbdtModel& model)>;

Objective resolve_objective(Objective requested, int class_count);

/// Plain second-order boosting.
GbdtModel train(const Dataset& ds, const TrainConfig& cfg, const RoundObserver& observer = {});

/// Boosting with per-round dropout of earlier rounds and 1/(k+1) normalization.
/// A drop rate of zero dispatches to train().
GbdtModel train_dart(const Dataset& ds, const TrainConfig& cfg, const RoundObserver& observer = {});

/// train_dart when dart_drop_rate > 0, train otherwise.
GbdtModel fit(const Dataset& ds, const TrainConfig& cfg, const RoundObserver& observer = {});

}  // namespace saia
