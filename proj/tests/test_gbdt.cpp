#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "saia/error.hpp"
#include "saia/gbdt.hpp"
#include "test_support.hpp"

using namespace saia;

namespace {

double logistic_loss(int y, double margin, double weight) {
    const double p = sigmoid(margin);
    return -weight * (y == 1 ? std::log(p) : std::log(1.0 - p));
}

double softmax_loss(int y, std::vector<double> margins) { return -std::log(softmax(margins)[y]); }

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

Dataset two_point(int positives, int negatives) {
    Dataset ds(2, 1);
    int id = 0;
    for (int i = 0; i < positives; ++i) ds.add({"p" + std::to_string(id++), {1.0}, 1});
    for (int i = 0; i < negatives; ++i) ds.add({"n" + std::to_string(id++), {2.0}, 0});
    return ds;
}

/// Unweighted logistic boosting written directly against build_tree.
GbdtModel reference_logistic_boost(const Dataset& ds, const TrainConfig& cfg) {
    const auto x = FeatureMatrix::from(ds);
    GbdtModel model(Objective::Logistic, 2, ds.feature_count(), cfg.learning_rate);
    std::vector<double> margin(ds.size(), 0.0);
    for (int r = 0; r < cfg.rounds; ++r) {
        std::vector<GradHess> grads;
        for (std::size_t i = 0; i < ds.size(); ++i) grads.push_back(grad_hess_logistic(*ds[i].label, margin[i]));
        Tree t = build_tree(grads, x, cfg);
        for (std::size_t i = 0; i < ds.size(); ++i) margin[i] += cfg.learning_rate * t.predict(x.row(i));
        model.add_round({t});
    }
    return model;
}

}  // namespace

TEST_CASE("logistic gradient examples") {
    auto gh = grad_hess_logistic(1, 0.0, 1.0);
    CHECK(gh.g == -0.5);
    CHECK(gh.h == 0.25);
    gh = grad_hess_logistic(1, 0.0, 3.0);
    CHECK(gh.g == -1.5);
    CHECK(gh.h == 0.75);
    CHECK(grad_hess_logistic(0, 800.0).h == kHessianFloor);
}

TEST_CASE("softmax gradient examples") {
    auto gh = grad_hess_softmax(0, std::vector<double>{0.0, 0.0});
    CHECK(gh[0].g == -0.5);
    CHECK(gh[1].g == 0.5);
    CHECK(gh[0].h == 0.25);
    CHECK(gh[1].h == 0.25);

    std::vector<double> m{0.3, -1.2, 2.0};
    std::vector<double> shifted{10.3, 8.8, 12.0};
    auto a = grad_hess_softmax(2, m);
    auto b = grad_hess_softmax(2, shifted);
    for (int c = 0; c < 3; ++c) {
        CHECK(a[c].g == doctest::Approx(b[c].g).epsilon(1e-12));
        CHECK(a[c].h == doctest::Approx(b[c].h).epsilon(1e-12));
    }
}

TEST_CASE("gradients match central finite differences") {
    Rng rng(21);
    const double step = 1e-5;
    for (int i = 0; i < 100; ++i) {
        const double margin = -6.0 + 12.0 * rng.uniform();
        const int y = static_cast<int>(rng.index(2));
        const double w = 0.5 + 4.0 * rng.uniform();
        const auto gh = grad_hess_logistic(y, margin, w);
        const double fd_g = (logistic_loss(y, margin + step, w) - logistic_loss(y, margin - step, w)) / (2 * step);
        const double fd_h = (grad_hess_logistic(y, margin + step, w).g - grad_hess_logistic(y, margin - step, w).g) /
                            (2 * step);
        CHECK(rel_err(gh.g, fd_g) < 1e-6);
        CHECK(rel_err(gh.h, fd_h) < 1e-5);
    }
    for (int i = 0; i < 100; ++i) {
        const std::size_t m = 2 + rng.index(7);
        std::vector<double> margins(m);
        for (auto& v : margins) v = -4.0 + 8.0 * rng.uniform();
        const int y = static_cast<int>(rng.index(m));
        const auto gh = grad_hess_softmax(y, margins);
        for (std::size_t c = 0; c < m; ++c) {
            auto up = margins, down = margins;
            up[c] += step;
            down[c] -= step;
            const double fd_g = (softmax_loss(y, up) - softmax_loss(y, down)) / (2 * step);
            const double fd_h = (grad_hess_softmax(y, up)[c].g - grad_hess_softmax(y, down)[c].g) / (2 * step);
            CHECK(rel_err(gh[c].g, fd_g) < 1e-5);
            CHECK(rel_err(gh[c].h, fd_h) < 1e-5);
        }
    }
}

TEST_CASE("single-leaf weights") {
    TrainConfig cfg;
    cfg.lambda = 0.0;
    cfg.max_depth = 0;
    cfg.rounds = 1;
    cfg.learning_rate = 1.0;

    auto all_pos = two_point(7, 0);
    auto model = train(all_pos, cfg);
    CHECK(model.trees()[0].nodes().size() == 1);
    CHECK(model.trees()[0].nodes()[0].weight == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(model.predict_proba(all_pos[0])[1] == doctest::Approx(sigmoid(2.0)).epsilon(1e-12));
    CHECK(sigmoid(2.0) == doctest::Approx(0.8808).epsilon(1e-4));

    auto pair = two_point(1, 1);
    for (double eps : {0.0, 1.0, 3.0, 10.0}) {
        cfg.epsilon = eps;
        const double leaf = train(pair, cfg).trees()[0].nodes()[0].weight;
        CHECK(std::abs(leaf - 2.0 * (eps - 1.0) / (eps + 1.0)) < 1e-12);
    }
    cfg.epsilon = 3.0;
    CHECK(train(pair, cfg).trees()[0].nodes()[0].weight == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("root split equals exhaustive scan") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto ds = testing::random_dataset(50, 3, 2, rng.next_u64());
        std::vector<GradHess> grads;
        for (const auto& s : ds) grads.push_back(grad_hess_logistic(*s.label, rng.normal(), 0.5 + rng.uniform()));
        TrainConfig cfg;
        cfg.max_depth = 1;
        cfg.lambda = 0.7;
        cfg.min_child_hessian = 0.5;

        // Oracle: every (feature, midpoint) pair, sums recomputed from scratch.
        double best_gain = 0.0;
        int best_f = -1;
        double best_t = 0.0;
        for (int f = 0; f < 3; ++f) {
            std::vector<double> values;
            for (const auto& s : ds) values.push_back(s.features[f]);
            std::sort(values.begin(), values.end());
            values.erase(std::unique(values.begin(), values.end()), values.end());
            for (std::size_t k = 0; k + 1 < values.size(); ++k) {
                const double t = (values[k] + values[k + 1]) / 2.0;
                double gl = 0, hl = 0, gr = 0, hr = 0;
                for (std::size_t i = 0; i < ds.size(); ++i) {
                    if (ds[i].features[f] < t) {
                        gl += grads[i].g;
                        hl += grads[i].h;
                    } else {
                        gr += grads[i].g;
                        hr += grads[i].h;
                    }
                }
                if (hl < cfg.min_child_hessian || hr < cfg.min_child_hessian) continue;
                const double gain = 0.5 * (gl * gl / (hl + cfg.lambda) + gr * gr / (hr + cfg.lambda) -
                                           (gl + gr) * (gl + gr) / (hl + hr + cfg.lambda));
                if (gain > best_gain + 1e-12) {
                    best_gain = gain;
                    best_f = f;
                    best_t = t;
                }
            }
        }
        const auto tree = build_tree(grads, FeatureMatrix::from(ds), cfg);
        REQUIRE(best_f >= 0);
        CHECK(tree.nodes()[0].feature == best_f);
        CHECK(tree.nodes()[0].threshold == doctest::Approx(best_t).epsilon(1e-12));
    }
}

TEST_CASE("tree growth respects depth, gamma and min_child_hessian") {
    auto ds = testing::random_dataset(300, 4, 2, 8, [](const std::vector<double>& x, Rng&) { return x[0] > 0 ? 1 : 0; });
    std::vector<GradHess> grads;
    for (const auto& s : ds) grads.push_back(grad_hess_logistic(*s.label, 0.0));
    const auto x = FeatureMatrix::from(ds);
    TrainConfig cfg;
    cfg.max_depth = 4;
    CHECK(build_tree(grads, x, cfg).depth() <= 4);
    cfg.gamma = 1e6;
    CHECK(build_tree(grads, x, cfg).nodes().size() == 1);
    cfg.gamma = 0.0;
    cfg.min_child_hessian = 1e6;
    CHECK(build_tree(grads, x, cfg).nodes().size() == 1);
}

TEST_CASE("epsilon one matches an unweighted reference booster") {
    auto ds = testing::random_dataset(200, 3, 2, 4, [](const std::vector<double>& x, Rng& r) {
        return x[0] + 0.5 * x[1] + 0.5 * r.normal() > 0 ? 1 : 0;
    });
    TrainConfig cfg;
    cfg.rounds = 10;
    cfg.epsilon = 1.0;
    CHECK(train(ds, cfg).serialize() == reference_logistic_boost(ds, cfg).serialize());
}

TEST_CASE("integer epsilon equals replicating positives") {
    auto ds = testing::random_dataset(120, 3, 2, 6, [](const std::vector<double>& x, Rng& r) {
        return x[0] - x[2] + r.normal() > 0.8 ? 1 : 0;
    });
    Dataset replicated(2, 3);
    for (const auto& s : ds) {
        const int copies = *s.label == 1 ? 3 : 1;
        for (int c = 0; c < copies; ++c) replicated.add({s.id + "_" + std::to_string(c), s.features, s.label});
    }
    TrainConfig cfg;
    cfg.rounds = 8;
    cfg.epsilon = 3.0;
    const auto weighted = train(ds, cfg);
    cfg.epsilon = 1.0;
    const auto copied = train(replicated, cfg);
    REQUIRE(weighted.trees().size() == copied.trees().size());
    for (std::size_t t = 0; t < weighted.trees().size(); ++t) {
        const auto a = weighted.trees()[t].nodes();
        const auto b = copied.trees()[t].nodes();
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].feature == b[i].feature);
            CHECK(a[i].threshold == b[i].threshold);
            CHECK(a[i].weight == doctest::Approx(b[i].weight).epsilon(1e-9));
        }
    }
}

TEST_CASE("epsilon zero erases the positive class") {
    auto ds = testing::random_dataset(300, 2, 2, 12, [](const std::vector<double>& x, Rng&) { return x[0] > 0.3 ? 1 : 0; });
    TrainConfig cfg;
    cfg.rounds = 20;
    cfg.epsilon = 0.0;
    const auto model = train(ds, cfg);
    for (const auto& s : ds) CHECK(model.predict_proba(s)[1] < 0.5);
}

TEST_CASE("separable data reaches high training accuracy") {
    auto ds = testing::random_dataset(2000, 4, 2, 17, [](const std::vector<double>& x, Rng&) {
        return 0.8 * x[0] - 0.6 * x[1] + 0.3 * x[2] > 0 ? 1 : 0;
    });
    TrainConfig cfg;
    cfg.rounds = 100;
    cfg.max_depth = 3;
    const auto model = train(ds, cfg);
    int correct = 0;
    for (const auto& s : ds) correct += argmax_class(model.predict_proba(s)) == *s.label;
    CHECK(correct / 2000.0 >= 0.95);
}

TEST_CASE("training loss is non-increasing per round") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto ds = testing::random_dataset(400, 3, 2, seed, [](const std::vector<double>& x, Rng& r) {
            return x[0] * x[1] + 0.3 * r.normal() > 0 ? 1 : 0;
        });
        TrainConfig cfg;
        cfg.rounds = 30;
        cfg.learning_rate = 0.3;
        cfg.gamma = 0.0;
        cfg.epsilon = 2.0 + static_cast<double>(seed);
        double previous = 0.0;
        for (const auto& s : ds) previous += logistic_loss(*s.label, 0.0, *s.label == 1 ? cfg.epsilon : 1.0);
        train(ds, cfg, [&](int, const GbdtModel& model) {
            double loss = 0.0;
            for (const auto& s : ds) {
                loss += logistic_loss(*s.label, model.margins(s.features)[0], *s.label == 1 ? cfg.epsilon : 1.0);
            }
            CHECK(loss <= previous + 1e-9);
            previous = loss;
        });
    }
}

TEST_CASE("softmax model emits valid posteriors and learns") {
    auto ds = testing::random_dataset(600, 3, 4, 31, [](const std::vector<double>& x, Rng&) {
        return (x[0] > 0 ? 1 : 0) + (x[1] > 0 ? 2 : 0);
    });
    TrainConfig cfg;
    cfg.rounds = 30;
    const auto model = train(ds, cfg);
    CHECK(model.objective() == Objective::Softmax);
    CHECK(model.groups() == 4);
    int correct = 0;
    for (const auto& s : ds) {
        const auto p = model.predict_proba(s);
        double sum = 0.0;
        for (double v : p.probs()) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
        correct += argmax_class(p) == *s.label;
    }
    CHECK(correct > 540);
}

TEST_CASE("objective and arity errors") {
    auto ds = testing::random_dataset(30, 2, 3, 2);
    TrainConfig cfg;
    cfg.objective = Objective::Logistic;
    cfg.rounds = 2;
    try {
        train(ds, cfg);
        FAIL("expected ObjectiveMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ObjectiveMismatch);
    }
    cfg.objective = Objective::Softmax;
    const auto model = train(ds, cfg);
    try {
        model.predict_proba(std::vector<double>{1.0});
        FAIL("expected ArityMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ArityMismatch);
    }
}

TEST_CASE("empty model predicts the base score") {
    GbdtModel model(Objective::Logistic, 2, 3, 0.3);
    const auto p = model.predict_proba(std::vector<double>{1, 2, 3});
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 0.5);
}

TEST_CASE("batch prediction equals per-sample prediction") {
    auto ds = testing::random_dataset(100, 3, 3, 77);
    TrainConfig cfg;
    cfg.rounds = 5;
    const auto model = train(ds, cfg);
    const auto batch = model.predict_proba(ds);
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(batch[i] == model.predict_proba(ds[i]));
}

TEST_CASE("serialization is deterministic and round-trips") {
    auto ds = testing::random_dataset(150, 3, 3, 41);
    TrainConfig cfg;
    cfg.rounds = 6;
    cfg.dart_drop_rate = 0.2;
    cfg.seed = 99;
    const auto a = fit(ds, cfg);
    const auto b = fit(ds, cfg);
    CHECK(a.serialize() == b.serialize());
    const auto back = GbdtModel::deserialize(a.serialize());
    CHECK(back == a);
    CHECK(back.serialize() == a.serialize());

    try {
        GbdtModel::deserialize("saia-gbdt 1\nobjective softmax\n");
        FAIL("expected MalformedModel");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MalformedModel);
    }
}

TEST_CASE("dart with one prior round drops it and halves both scales") {
    auto ds = testing::random_dataset(80, 2, 2, 5);
    TrainConfig cfg;
    cfg.rounds = 2;
    cfg.dart_drop_rate = 1e-12;
    const auto model = train_dart(ds, cfg);
    REQUIRE(model.scales().size() == 2);
    CHECK(model.scales()[0] == 0.5);
    CHECK(model.scales()[1] == 0.5);
}

TEST_CASE("dart with zero drop rate is plain boosting") {
    auto ds = testing::random_dataset(120, 3, 3, 6);
    TrainConfig cfg;
    cfg.rounds = 10;
    cfg.dart_drop_rate = 0.0;
    CHECK(train_dart(ds, cfg).serialize() == train(ds, cfg).serialize());
}

TEST_CASE("dart per-round margin change is bounded by learning rate times largest touched leaf") {
    auto ds = testing::random_dataset(200, 3, 2, 14, [](const std::vector<double>& x, Rng& r) {
        return x[0] + x[1] * x[2] + 0.4 * r.normal() > 0 ? 1 : 0;
    });
    TrainConfig cfg;
    cfg.rounds = 25;
    cfg.dart_drop_rate = 0.3;
    cfg.seed = 8;
    std::vector<std::vector<double>> before;
    std::vector<double> before_scales;
    std::vector<Tree> before_trees;
    train_dart(ds, cfg, [&](int round, const GbdtModel& model) {
        std::vector<std::vector<double>> now;
        for (const auto& s : ds) now.push_back(model.margins(s.features));
        if (round > 0) {
            // Bound uses the new tree and every round whose scale changed.
            double largest = model.trees().back().max_abs_leaf();
            for (std::size_t t = 0; t < before_trees.size(); ++t) {
                if (model.scales()[t] != before_scales[t]) {
                    largest = std::max(largest, before_scales[t] * before_trees[t].max_abs_leaf());
                }
            }
            const double bound = cfg.learning_rate * largest;
            for (std::size_t i = 0; i < ds.size(); ++i) CHECK(std::abs(now[i][0] - before[i][0]) <= bound + 1e-12);
        }
        before = now;
        before_scales.assign(model.scales().begin(), model.scales().end());
        before_trees.assign(model.trees().begin(), model.trees().end());
    });
}
