#include "saia/pipeline.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "saia/error.hpp"
#include "saia/random.hpp"
#include "saia/text.hpp"

namespace saia {

void CostModel::validate() const {
    if (!(t_client > 0.0) || !(t_server > 0.0)) throw Error(ErrorKind::InvalidArgument, "costs must be positive");
}

void RunConfig::validate() const {
    cost.validate();
    if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorKind::InvalidArgument, "threshold must be in (0,1)");
    if (endpoint && (endpoint->host.empty() || endpoint->port <= 0 || endpoint->port > 65535)) {
        throw Error(ErrorKind::ConfigError, "socket transport needs host and port");
    }
}

Router du_router(const GbdtModel& du, double threshold) {
    return [&du, threshold](const PosteriorVector& meta, bool comm) { return route(du, meta, comm, threshold); };
}

Router always_send_router() {
    return [](const PosteriorVector&, bool comm) {
        return RoutingDecision{comm ? Route::SendToServer : Route::KeepOnClient, 1.0};
    };
}

RunResult run_split(const Dataset& test, const GbdtModel& embedded, const Router& router, EnsembleClient& client,
                    const RunConfig& cfg, const std::unordered_map<std::string, int>* routing_labels) {
    cfg.validate();
    if (!test.labeled()) throw Error(ErrorKind::InvalidArgument, "test set must be labeled");
    if (embedded.class_count() != test.class_count() || client.class_count() != test.class_count()) {
        throw Error(ErrorKind::ArityMismatch, "embedded, ensemble and test set disagree on class count");
    }

    RunResult result;
    std::vector<char> sent_flags;
    std::vector<int> labels;
    std::size_t sent = 0;
    std::size_t correct = 0;
    for (const auto& s : test) {
        SampleOutcome o;
        o.id = s.id;
        o.true_label = *s.label;
        const auto meta = embedded.predict_proba(s);
        o.embedded_pred = argmax_class(meta);
        o.decision = router(meta, cfg.comm_available);
        if (!cfg.comm_available) o.decision.route = Route::KeepOnClient;
        o.final_pred = o.embedded_pred;
        if (o.decision.route == Route::SendToServer) {
            try {
                o.networked = client.predict(s);
                o.final_pred = o.networked->label;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::TransportFailure) throw;
                if (!cfg.fallback_on_failure) {
                    result.valid = false;
                    result.error = e.what();
                    break;
                }
                o.decision.route = Route::KeepOnClient;
            }
        }
        const bool was_sent = o.decision.route == Route::SendToServer;
        sent += was_sent;
        correct += o.final_pred == o.true_label;
        if (routing_labels) {
            auto it = routing_labels->find(s.id);
            if (it == routing_labels->end()) throw Error(ErrorKind::MissingPrediction, "no routing label for " + s.id);
            sent_flags.push_back(was_sent);
            labels.push_back(it->second);
        }
        result.outcomes.push_back(std::move(o));
    }

    const double n = static_cast<double>(result.outcomes.size());
    auto& r = result.record;
    r.fraction_sent = n > 0 ? static_cast<double>(sent) / n : 0.0;
    r.accuracy = n > 0 ? static_cast<double>(correct) / n : 0.0;
    r.elapsed_per_sample = cfg.cost.elapsed(r.fraction_sent);
    if (routing_labels && !labels.empty()) {
        const auto c = tally_confusion(sent_flags, labels);
        if (c.tp + c.fn > 0) r.tpr = c.tpr();
        if (c.fp + c.tn > 0) r.fpr = c.fpr();
    }
    return result;
}

RunResult run_split(const Dataset& test, const GbdtModel& embedded, const GbdtModel& du, EnsembleClient& client,
                    const RunConfig& cfg, const std::unordered_map<std::string, int>* routing_labels) {
    return run_split(test, embedded, du_router(du, cfg.threshold), client, cfg, routing_labels);
}

double embedded_accuracy(const Dataset& test, const GbdtModel& embedded) {
    std::size_t correct = 0;
    for (const auto& s : test) correct += argmax_class(embedded.predict_proba(s)) == *s.label;
    return test.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(test.size());
}

double networked_accuracy(const Dataset& test, EnsembleClient& client) {
    std::size_t correct = 0;
    for (const auto& s : test) correct += client.predict(s).label == *s.label;
    return test.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(test.size());
}

std::vector<SweepRecord> epsilon_sweep(const std::vector<double>& eps_grid, const SweepInputs& in,
                                       const DuConfig& du_cfg, EnsembleClient& client, const RunConfig& cfg,
                                       std::vector<GbdtModel>* trained_dus) {
    if (eps_grid.empty()) throw Error(ErrorKind::InvalidArgument, "epsilon grid is empty");
    std::unordered_map<std::string, int> labels;
    for (const auto& r : in.meta_test) {
        if (r.routing_label) labels.emplace(r.id, *r.routing_label);
    }
    std::vector<SweepRecord> out;
    for (double eps : eps_grid) {
        DuConfig point = du_cfg;
        point.epsilon = eps;
        point.train.seed = mix_seed(du_cfg.train.seed, std::bit_cast<std::uint64_t>(eps));
        auto du = train_du(in.meta_train, point);
        auto run = run_split(in.test, in.embedded, du, client, cfg, &labels);
        if (!run.valid) throw Error(ErrorKind::TransportFailure, "sweep point failed: " + run.error);
        run.record.epsilon = eps;
        out.push_back(run.record);
        if (trained_dus) trained_dus->push_back(std::move(du));
    }
    return out;
}

BaselineResult random_baseline(std::span<const int> truth, std::span<const int> embedded_pred,
                               std::span<const int> networked_pred, double fraction, int trials, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error(ErrorKind::InvalidArgument, "fraction must be in [0,1]");
    if (trials < 1) throw Error(ErrorKind::InvalidArgument, "trials must be >= 1");
    const std::size_t n = truth.size();
    if (embedded_pred.size() != n || networked_pred.size() != n) {
        throw Error(ErrorKind::ArityMismatch, "prediction vectors differ in length");
    }
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));

    // Counts are integers, so identical trials give an exactly zero spread.
    std::vector<double> counts;
    std::vector<std::size_t> order(n);
    for (int t = 0; t < trials; ++t) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
        rng.shuffle(std::span<std::size_t>(order));
        std::vector<char> send(n, 0);
        for (std::size_t i = 0; i < k; ++i) send[order[i]] = 1;
        std::size_t correct = 0;
        for (std::size_t i = 0; i < n; ++i) correct += (send[i] ? networked_pred[i] : embedded_pred[i]) == truth[i];
        counts.push_back(static_cast<double>(correct));
    }
    const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / trials;
    double ss = 0.0;
    for (double c : counts) ss += (c - mean) * (c - mean);
    BaselineResult r;
    r.fraction = fraction;
    r.trials = trials;
    r.mean = n ? mean / static_cast<double>(n) : 0.0;
    r.stddev = trials > 1 && n ? std::sqrt(ss / (trials - 1)) / static_cast<double>(n) : 0.0;
    return r;
}

BaselineResult random_baseline(const Dataset& test, const GbdtModel& embedded, EnsembleClient& client,
                               double fraction, int trials, std::uint64_t seed) {
    std::vector<int> truth, emb, net;
    for (const auto& s : test) {
        truth.push_back(*s.label);
        emb.push_back(argmax_class(embedded.predict_proba(s)));
        net.push_back(client.predict(s).label);
    }
    return random_baseline(truth, emb, net, fraction, trials, seed);
}

namespace {

constexpr const char* kSweepHeader = "epsilon,fraction_sent,accuracy,tpr,fpr,elapsed_per_sample";

}  // namespace

std::string sweep_to_csv(const std::vector<SweepRecord>& records) {
    std::string out = std::string(kSweepHeader) + "\n";
    for (const auto& r : records) {
        out += format_double(r.epsilon) + "," + format_double(r.fraction_sent) + "," + format_double(r.accuracy) + "," +
               format_double(r.tpr) + "," + format_double(r.fpr) + "," + format_double(r.elapsed_per_sample) + "\n";
    }
    return out;
}

std::vector<SweepRecord> parse_sweep_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kSweepHeader) throw Error(ErrorKind::MalformedRow, "bad sweep header");
    std::vector<SweepRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 6) throw Error(ErrorKind::MalformedRow, "sweep row needs 6 fields");
        double v[6];
        for (int i = 0; i < 6; ++i) {
            auto p = parse_double(f[i]);
            if (!p) throw Error(ErrorKind::MalformedRow, "non-numeric sweep field");
            v[i] = *p;
        }
        out.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
    }
    return out;
}

std::string sweep_summary(const std::vector<SweepRecord>& records) {
    if (records.empty()) throw Error(ErrorKind::InvalidArgument, "no sweep records");
    std::ostringstream out;
    out << "points " << records.size() << "\n";
    for (const auto& r : records) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "eps=%-6g sent=%5.1f%% acc=%6.2f%% tpr=%.3f fpr=%.3f elapsed=%.3fs\n",
                      r.epsilon, 100.0 * r.fraction_sent, 100.0 * r.accuracy, r.tpr, r.fpr, r.elapsed_per_sample);
        out << buf;
    }
    return out.str();
}

}  // namespace saia
