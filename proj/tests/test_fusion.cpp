#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "saia/error.hpp"
#include "saia/fusion.hpp"
#include "saia/text.hpp"
#include "test_support.hpp"

using namespace saia;

namespace {

DecisionMatrix random_matrix(Rng& rng, std::size_t k, std::size_t m) {
    std::vector<PosteriorVector> rows;
    for (std::size_t i = 0; i < k; ++i) rows.emplace_back(testing::random_simplex(rng, m));
    return DecisionMatrix(std::move(rows));
}

PosteriorTable table_of(const std::string& name, std::vector<std::pair<std::string, std::vector<double>>> rows) {
    PosteriorTable t(name, static_cast<int>(rows.front().second.size()));
    for (auto& [id, p] : rows) t.insert(id, PosteriorVector(p));
    return t;
}

Sample unlabeled(const std::string& id, std::vector<double> x = {0.0}) { return Sample{id, std::move(x), std::nullopt}; }

}  // namespace

TEST_CASE("fuse examples") {
    auto one = fuse(DecisionMatrix({PosteriorVector({0.2, 0.8})}), FusionWeights({1.0}));
    CHECK(one == std::vector<double>{0.2, 0.8});
    auto two = fuse(DecisionMatrix({PosteriorVector({0.9, 0.1}), PosteriorVector({0.5, 0.5})}), FusionWeights({0.5, 0.5}));
    CHECK(two[0] == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(two[1] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(decide(two) == 0);
    CHECK(decide(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == 0);
}

TEST_CASE("fuse and decide agree with naive oracles on random matrices") {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 1 + rng.index(12);
        const std::size_t m = 1 + rng.index(8);
        const auto dm = random_matrix(rng, k, m);
        std::vector<double> w(k);
        for (auto& v : w) v = rng.uniform();
        w[rng.index(k)] += 0.1;
        const auto got = fuse(dm, FusionWeights(w));

        std::vector<double> expected(m, 0.0);
        for (std::size_t c = 0; c < m; ++c) {
            for (std::size_t i = 0; i < k; ++i) expected[c] += w[i] * dm.row(i)[c];
        }
        CHECK(got == expected);

        std::size_t best = 0;
        for (std::size_t c = 0; c < m; ++c) best = expected[c] > expected[best] ? c : best;
        CHECK(decide(got) == static_cast<int>(best));
    }
}

TEST_CASE("fusion invariants") {
    Rng rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t k = 1 + rng.index(12);
        const std::size_t m = 2 + rng.index(7);
        const auto dm = random_matrix(rng, k, m);

        // Uniform weights give a valid posterior.
        const auto uniform = fuse(dm, FusionWeights::uniform(k));
        CHECK(std::abs(std::accumulate(uniform.begin(), uniform.end(), 0.0) - 1.0) < 1e-9);
        CHECK_NOTHROW(PosteriorVector{uniform});

        // Decision unchanged when all weights scale by c > 0.
        std::vector<double> w(k);
        for (auto& v : w) v = 0.05 + rng.uniform();
        const double c = 0.001 + 1000.0 * rng.uniform();
        std::vector<double> scaled(w);
        for (auto& v : scaled) v *= c;
        const auto base = fuse(dm, FusionWeights(w));
        const auto big = fuse(dm, FusionWeights(scaled));
        bool near_tie = false;
        auto sorted = base;
        std::sort(sorted.begin(), sorted.end());
        if (sorted.size() > 1) near_tie = sorted.back() - sorted[sorted.size() - 2] < 1e-12;
        if (!near_tie) CHECK(decide(base) == decide(big));

        // Permuting classifiers together with their weights.
        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(std::span<std::size_t>(perm));
        std::vector<PosteriorVector> rows;
        std::vector<double> pw;
        for (auto i : perm) {
            rows.push_back(dm.row(i));
            pw.push_back(w[i]);
        }
        const auto permuted = fuse(DecisionMatrix(rows), FusionWeights(pw));
        for (std::size_t j = 0; j < m; ++j) CHECK(std::abs(permuted[j] - base[j]) <= 1e-14 * std::max(1.0, base[j]));
    }
}

TEST_CASE("fusion argument errors") {
    const DecisionMatrix dm({PosteriorVector({0.5, 0.5})});
    CHECK_THROWS_AS(fuse(dm, FusionWeights({0.5, 0.5})), Error);
    CHECK_THROWS_AS(FusionWeights({0.0, 0.0}), Error);
    CHECK_THROWS_AS(FusionWeights({-1.0, 2.0}), Error);
    CHECK_THROWS_AS(DecisionMatrix({PosteriorVector({1.0}), PosteriorVector({0.5, 0.5})}), Error);
}

TEST_CASE("ensemble of identical oracles equals the single oracle") {
    auto t = table_of("a", {{"x", {0.1, 0.6, 0.3}}, {"y", {0.7, 0.2, 0.1}}});
    Ensemble single({ClassifierOracle("a", t)});
    Ensemble triple({ClassifierOracle("a", t), ClassifierOracle("b", t), ClassifierOracle("c", t)});
    for (const char* id : {"x", "y"}) {
        const auto s = unlabeled(id);
        const auto one = ensemble_predict(single, s);
        const auto three = ensemble_predict(triple, s);
        CHECK(one.label == three.label);
        for (std::size_t c = 0; c < 3; ++c) CHECK(three.scores[c] == doctest::Approx(one.scores[c]).epsilon(1e-15));
    }
}

TEST_CASE("disagreeing oracles tie toward class zero") {
    Ensemble e({ClassifierOracle("a", table_of("a", {{"x", {1.0, 0.0}}})),
                ClassifierOracle("b", table_of("b", {{"x", {0.0, 1.0}}}))});
    const auto p = ensemble_predict(e, unlabeled("x"));
    CHECK(p.scores == std::vector<double>{0.5, 0.5});
    CHECK(p.label == 0);
}

TEST_CASE("mixed table and model ensemble equals manual assembly") {
    auto ds = testing::random_dataset(60, 2, 3, 5);
    TrainConfig cfg;
    cfg.rounds = 4;
    const auto model = train(ds, cfg);
    PosteriorTable table("cnn", 3);
    Rng rng(4);
    for (const auto& s : ds) table.insert(s.id, PosteriorVector(testing::random_simplex(rng, 3)));
    Ensemble e({ClassifierOracle("cnn", table), ClassifierOracle("gbdt", model)}, {0.25, 0.75});
    for (const auto& s : ds) {
        const DecisionMatrix manual({*table.find(s.id), model.predict_proba(s)});
        const auto expected = fuse(manual, FusionWeights({0.25, 0.75}));
        const auto got = ensemble_predict(e, s);
        CHECK(got.scores == expected);
        CHECK(got.label == decide(expected));
    }
    try {
        ensemble_predict(e, Sample{"nope", {0.0, 0.0}, std::nullopt});
        FAIL("expected MissingPrediction");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::MissingPrediction);
    }
}

TEST_CASE("ensemble_predict is order independent") {
    Rng rng(8);
    PosteriorTable a("a", 4), b("b", 4);
    std::vector<Sample> samples;
    for (int i = 0; i < 50; ++i) {
        const auto id = "s" + std::to_string(i);
        a.insert(id, PosteriorVector(testing::random_simplex(rng, 4)));
        b.insert(id, PosteriorVector(testing::random_simplex(rng, 4)));
        samples.push_back(unlabeled(id));
    }
    Ensemble e({ClassifierOracle("a", a), ClassifierOracle("b", b)});
    std::vector<EnsemblePrediction> forward;
    for (const auto& s : samples) forward.push_back(ensemble_predict(e, s));
    for (int i = 49; i >= 0; --i) {
        const auto p = ensemble_predict(e, samples[i]);
        CHECK(p.scores == forward[i].scores);
        CHECK(p.label == forward[i].label);
    }
}

TEST_CASE("posterior table files") {
    auto dir = testing::scratch_dir("fusion_tables");
    const auto path = (dir / "t.csv").string();

    write_file(path, "id,model,p0,p1\na,cnn,0.25,0.75\nb,cnn,1,0\nc,cnn,0.5,0.5\n");
    auto oracle = load_posterior_table(path);
    CHECK(oracle.name() == "cnn");
    CHECK(oracle.query(unlabeled("b"))[0] == 1.0);
    CHECK(oracle.query(unlabeled("a"))[1] == 0.75);

    write_file(path, "id,model,p0,p1\na,cnn,0.3,0.5\n");
    CHECK_THROWS_WITH_AS(load_posterior_table(path), doctest::Contains("RowNotNormalized"), Error);
    write_file(path, "id,model,p0,p1\na,cnn,0.3,0.7\na,cnn,0.4,0.6\n");
    CHECK_THROWS_WITH_AS(load_posterior_table(path), doctest::Contains("DuplicateKey"), Error);
    write_file(path, "id,model,p0,p1\na,x,0.3,0.7\na,y,0.4,0.6\n");
    CHECK(load_posterior_tables(path).size() == 2);

    // Slightly unnormalized rows within 1e-3 are accepted and renormalized.
    write_file(path, "id,model,p0,p1\na,cnn,0.3,0.7005\n");
    CHECK(std::abs(load_posterior_table(path).query(unlabeled("a"))[0] - 0.3 / 1.0005) < 1e-15);
}

TEST_CASE("posterior tables round-trip") {
    Rng rng(12);
    std::vector<PosteriorTable> tables{PosteriorTable("m0", 5), PosteriorTable("m1", 5)};
    for (int i = 0; i < 200; ++i) {
        for (auto& t : tables) t.insert("id" + std::to_string(i), PosteriorVector(testing::random_simplex(rng, 5)));
    }
    const auto back = parse_posterior_tables(posterior_tables_to_csv(tables));
    REQUIRE(back.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(back[k].model_name() == tables[k].model_name());
        for (const auto& [id, p] : tables[k].rows()) {
            const auto* q = back[k].find(id);
            REQUIRE(q);
            for (std::size_t c = 0; c < 5; ++c) CHECK(std::abs((*q)[c] - p[c]) <= 1e-12);
        }
    }
}

TEST_CASE("ensemble manifest") {
    auto dir = testing::scratch_dir("fusion_manifest");
    write_file((dir / "t.csv").string(), "id,model,p0,p1\na,x,0.2,0.8\na,y,0.6,0.4\n");
    write_file((dir / "e.json").string(),
               R"({"oracles":[{"name":"x","table":"t.csv","model_name":"x"},{"name":"y","table":"t.csv","model_name":"y"}],
                   "weights":[0.5,0.5]})");
    const auto e = load_ensemble_manifest((dir / "e.json").string());
    CHECK(e.size() == 2);
    const auto p = ensemble_predict(e, unlabeled("a"));
    CHECK(p.scores[0] == doctest::Approx(0.4));
    CHECK(p.label == 1);

    write_file((dir / "bad.json").string(), R"({"oracles":[{"name":"x"}]})");
    CHECK_THROWS_WITH_AS(load_ensemble_manifest((dir / "bad.json").string()), doctest::Contains("ConfigError"), Error);
}
