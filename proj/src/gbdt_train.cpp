#include <cmath>

#include "saia/error.hpp"
#include "saia/gbdt.hpp"
#include "saia/random.hpp"
#include "saia/text.hpp"

namespace saia {

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); };
    if (rounds < 0) fail("rounds must be >= 0");
    if (max_depth < 0) fail("max_depth must be >= 0");
    if (!(min_child_hessian >= 0.0)) fail("min_child_hessian must be >= 0");
    if (!(lambda >= 0.0)) fail("lambda must be >= 0");
    if (!(gamma >= 0.0)) fail("gamma must be >= 0");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) fail("learning_rate must be in (0,1]");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) fail("epsilon must be a finite value >= 0");
    if (!(dart_drop_rate >= 0.0 && dart_drop_rate < 1.0)) fail("dart_drop_rate must be in [0,1)");
}

Objective resolve_objective(Objective requested, int class_count) {
    if (requested != Objective::Auto) return requested;
    return class_count == 2 ? Objective::Logistic : Objective::Softmax;
}

namespace {

/// Data shared by every boosting round: features, labels and per-sample scales.
class Booster {
public:
    Booster(const Dataset& ds, const TrainConfig& cfg)
        : cfg_(cfg),
          objective_(resolve_objective(cfg.objective, ds.class_count())),
          x_(FeatureMatrix::from(ds)) {
        cfg.validate();
        if (ds.empty()) throw Error(ErrorKind::InvalidArgument, "training set is empty");
        labels_ = ds.labels();
        if (objective_ == Objective::Logistic) {
            for (int y : labels_) {
                if (y > 1) throw Error(ErrorKind::ObjectiveMismatch, "logistic objective needs labels in {0,1}");
            }
            weights_.reserve(labels_.size());
            for (int y : labels_) weights_.push_back(y == 1 ? cfg.epsilon : 1.0);
        } else if (ds.class_count() < 2) {
            throw Error(ErrorKind::ObjectiveMismatch, "softmax objective needs at least two classes");
        }
        model_class_count_ = objective_ == Objective::Logistic ? 2 : ds.class_count();
    }

    GbdtModel empty_model() const {
        return GbdtModel(objective_, model_class_count_, static_cast<int>(x_.cols()), cfg_.learning_rate, 0.0);
    }

    int groups() const { return objective_ == Objective::Logistic ? 1 : model_class_count_; }
    std::size_t rows() const { return x_.rows(); }

    /// Fits one round of trees to the gradients at `margins` (rows x groups).
    std::vector<Tree> fit_round(const std::vector<double>& margins) const {
        const std::size_t n = rows();
        const int k = groups();
        std::vector<Tree> trees;
        if (objective_ == Objective::Logistic) {
            std::vector<GradHess> grads(n);
            for (std::size_t i = 0; i < n; ++i) grads[i] = grad_hess_logistic(labels_[i], margins[i], weights_[i]);
            trees.push_back(build_tree(grads, x_, cfg_));
            return trees;
        }
        std::vector<std::vector<GradHess>> per_class(k, std::vector<GradHess>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const auto gh = grad_hess_softmax(labels_[i], std::span<const double>(margins).subspan(i * k, k));
            for (int c = 0; c < k; ++c) per_class[c][i] = gh[c];
        }
        for (int c = 0; c < k; ++c) trees.push_back(build_tree(per_class[c], x_, cfg_));
        return trees;
    }

    /// learning_rate * tree output for every row, laid out rows x groups.
    std::vector<double> round_outputs(const std::vector<Tree>& trees) const {
        const std::size_t n = rows();
        const int k = groups();
        std::vector<double> out(n * k);
        for (std::size_t i = 0; i < n; ++i) {
            for (int c = 0; c < k; ++c) out[i * k + c] = cfg_.learning_rate * trees[c].predict(x_.row(i));
        }
        return out;
    }

private:
    const TrainConfig& cfg_;
    Objective objective_;
    FeatureMatrix x_;
    std::vector<int> labels_;
    std::vector<double> weights_;
    int model_class_count_ = 0;
};

}  // namespace

GbdtModel train(const Dataset& ds, const TrainConfig& cfg, const RoundObserver& observer) {
    Booster booster(ds, cfg);
    GbdtModel model = booster.empty_model();
    std::vector<double> margins(booster.rows() * booster.groups(), model.base_score());
    for (int r = 0; r < cfg.rounds; ++r) {
        auto trees = booster.fit_round(margins);
        const auto delta = booster.round_outputs(trees);
        for (std::size_t i = 0; i < margins.size(); ++i) margins[i] += delta[i];
        model.add_round(std::move(trees));
        if (observer) observer(r, model);
    }
    return model;
}

GbdtModel train_dart(const Dataset& ds, const TrainConfig& cfg, const RoundObserver& observer) {
    if (cfg.dart_drop_rate == 0.0) return train(ds, cfg, observer);
    Booster booster(ds, cfg);
    GbdtModel model = booster.empty_model();
    const int k = booster.groups();
    const std::size_t width = booster.rows() * k;
    std::vector<std::vector<double>> outputs;  // unscaled per-round contributions

    for (int r = 0; r < cfg.rounds; ++r) {
        std::vector<char> dropped(static_cast<std::size_t>(r), 0);
        int drop_count = 0;
        if (r > 0) {
            Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(r)));
            for (int j = 0; j < r; ++j) {
                if (rng.uniform() < cfg.dart_drop_rate) {
                    dropped[j] = 1;
                    ++drop_count;
                }
            }
            if (drop_count == 0) {
                dropped[rng.index(static_cast<std::size_t>(r))] = 1;
                drop_count = 1;
            }
        }

        std::vector<double> margins(width, model.base_score());
        const auto scales = model.scales();
        for (int j = 0; j < r; ++j) {
            if (dropped[j]) continue;
            for (std::size_t i = 0; i < width; ++i) {
                margins[i] += scales[static_cast<std::size_t>(j * k) + i % k] * outputs[j][i];
            }
        }

        auto trees = booster.fit_round(margins);
        outputs.push_back(booster.round_outputs(trees));
        const double kd = static_cast<double>(drop_count);
        for (int j = 0; j < r; ++j) {
            if (dropped[j]) model.rescale_round(j, kd / (kd + 1.0));
        }
        model.add_round(std::move(trees), 1.0 / (kd + 1.0));
        if (observer) observer(r, model);
    }
    return model;
}

GbdtModel fit(const Dataset& ds, const TrainConfig& cfg, const RoundObserver& observer) {
    return cfg.dart_drop_rate > 0.0 ? train_dart(ds, cfg, observer) : train(ds, cfg, observer);
}

}  // namespace saia
