#include "saia/decision_unit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "saia/error.hpp"
#include "saia/random.hpp"
#include "saia/text.hpp"

namespace saia {

void DuConfig::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw Error(ErrorKind::InvalidArgument, "epsilon must be >= 0");
    if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorKind::InvalidArgument, "threshold must be in (0,1)");
    if (jitter_copies < 0 || !(jitter_sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "bad jitter settings");
}

int label_rule(int embedded_pred, int networked_pred, int true_label) {
    return embedded_pred != networked_pred && networked_pred == true_label ? 1 : 0;
}

Route oracle_route(int embedded_pred, int networked_pred, int true_label) {
    return label_rule(embedded_pred, networked_pred, true_label) ? Route::SendToServer : Route::KeepOnClient;
}

std::vector<MetaRecord> generate_meta(const GbdtModel& embedded, const Ensemble& ensemble, const Dataset& meta_ds) {
    if (!meta_ds.labeled()) throw Error(ErrorKind::InvalidArgument, "meta-information set must be labeled");
    if (embedded.class_count() != meta_ds.class_count() || ensemble.class_count() != meta_ds.class_count()) {
        throw Error(ErrorKind::ArityMismatch, "embedded, ensemble and meta set disagree on class count");
    }
    std::vector<MetaRecord> out;
    out.reserve(meta_ds.size());
    for (const auto& s : meta_ds) {
        auto probs = embedded.predict_proba(s);
        const int emb = argmax_class(probs);
        const int net = ensemble_predict(ensemble, s).label;
        out.push_back({s.id, std::move(probs), label_rule(emb, net, *s.label)});
    }
    return out;
}

std::vector<MetaRecord> jitter_meta(const std::vector<MetaRecord>& records, int copies, double sigma,
                                    std::uint64_t seed) {
    Rng rng(seed);
    std::vector<MetaRecord> out;
    for (const auto& r : records) {
        for (int c = 0; c < copies; ++c) {
            std::vector<double> p(r.meta.probs().begin(), r.meta.probs().end());
            double sum = 0.0;
            for (double& v : p) {
                v = std::max(0.0, v + sigma * rng.normal());
                sum += v;
            }
            if (sum <= 0.0) {
                p.assign(r.meta.probs().begin(), r.meta.probs().end());
            } else {
                for (double& v : p) v /= sum;
            }
            out.push_back({r.id + "~" + std::to_string(c), PosteriorVector(std::move(p)), r.routing_label});
        }
    }
    return out;
}

GbdtModel train_du(const std::vector<MetaRecord>& records, const DuConfig& cfg) {
    cfg.validate();
    if (records.empty()) throw Error(ErrorKind::InvalidArgument, "no meta records to train on");
    const int m = static_cast<int>(records.front().meta.size());

    std::vector<MetaRecord> all = records;
    if (cfg.jitter_copies > 0) {
        auto extra = jitter_meta(records, cfg.jitter_copies, cfg.jitter_sigma, mix_seed(cfg.train.seed, 0x6a17));
        all.insert(all.end(), std::make_move_iterator(extra.begin()), std::make_move_iterator(extra.end()));
    }

    Dataset ds(2, m);
    std::size_t positives = 0;
    for (const auto& r : all) {
        if (!r.routing_label) throw Error(ErrorKind::InvalidArgument, "meta record " + r.id + " is unlabeled");
        if (static_cast<int>(r.meta.size()) != m) throw Error(ErrorKind::ArityMismatch, "meta records differ in arity");
        positives += *r.routing_label == 1;
        ds.add({r.id, std::vector<double>(r.meta.probs().begin(), r.meta.probs().end()), r.routing_label});
    }
    if ((positives == 0 || positives == ds.size()) && cfg.epsilon > 0.0) {
        throw Error(ErrorKind::DegenerateLabels, "decision unit needs both keep and send examples");
    }

    TrainConfig tc = cfg.train;
    tc.objective = Objective::Logistic;
    tc.epsilon = cfg.epsilon;
    return fit(ds, tc);
}

double du_score(const GbdtModel& du, const PosteriorVector& meta) {
    if (du.objective() != Objective::Logistic) throw Error(ErrorKind::ObjectiveMismatch, "decision unit must be binary");
    return du.predict_proba(meta.probs())[1];
}

RoutingDecision route(const GbdtModel& du, const PosteriorVector& meta, bool comm_available, double threshold) {
    const double score = du_score(du, meta);
    if (!comm_available) return {Route::KeepOnClient, score};
    return {score >= threshold ? Route::SendToServer : Route::KeepOnClient, score};
}

Confusion tally_confusion(std::span<const char> sent, std::span<const int> labels) {
    if (sent.size() != labels.size()) throw Error(ErrorKind::ArityMismatch, "decisions and labels differ in length");
    Confusion c;
    for (std::size_t i = 0; i < sent.size(); ++i) {
        if (labels[i] == 1) {
            (sent[i] ? c.tp : c.fn) += 1;
        } else {
            (sent[i] ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

Confusion du_confusion(const GbdtModel& du, const std::vector<MetaRecord>& records, double threshold) {
    std::vector<char> sent;
    std::vector<int> labels;
    for (const auto& r : records) {
        if (!r.routing_label) throw Error(ErrorKind::InvalidArgument, "meta record " + r.id + " is unlabeled");
        sent.push_back(route(du, r.meta, true, threshold).route == Route::SendToServer);
        labels.push_back(*r.routing_label);
    }
    const bool has_pos = std::count(labels.begin(), labels.end(), 1) > 0;
    const bool has_neg = std::count(labels.begin(), labels.end(), 0) > 0;
    if (!has_pos || !has_neg) throw Error(ErrorKind::DegenerateLabels, "confusion needs both routing classes");
    return tally_confusion(sent, labels);
}

std::string meta_records_to_csv(const std::vector<MetaRecord>& records) {
    if (records.empty()) throw Error(ErrorKind::InvalidArgument, "no meta records to write");
    std::string out = "id";
    for (std::size_t c = 0; c < records.front().meta.size(); ++c) out += ",p" + std::to_string(c);
    out += ",routing_label\n";
    for (const auto& r : records) {
        out += r.id;
        for (double p : r.meta.probs()) out += "," + format_double(p);
        out += ",";
        if (r.routing_label) out += std::to_string(*r.routing_label);
        out += "\n";
    }
    return out;
}

std::vector<MetaRecord> parse_meta_records(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::MalformedRow, "meta records missing header");
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header.front() != "id" || header.back() != "routing_label") {
        throw Error(ErrorKind::MalformedRow, "meta header must be id,p0,...,routing_label");
    }
    const std::size_t m = header.size() - 2;
    std::vector<MetaRecord> out;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size()) throw Error(ErrorKind::MalformedRow, "meta row has wrong field count");
        std::vector<double> p;
        for (std::size_t c = 0; c < m; ++c) {
            auto v = parse_double(f[c + 1]);
            if (!v) throw Error(ErrorKind::MalformedRow, "non-numeric meta probability");
            p.push_back(*v);
        }
        std::optional<int> label;
        if (!f.back().empty()) {
            auto v = parse_int(f.back());
            if (!v || (*v != 0 && *v != 1)) throw Error(ErrorKind::MalformedRow, "routing label must be 0 or 1");
            label = static_cast<int>(*v);
        }
        out.push_back({std::string(f[0]), PosteriorVector(std::move(p)), label});
    }
    return out;
}

void save_meta_records(const std::vector<MetaRecord>& records, const std::string& path) {
    write_file(path, meta_records_to_csv(records));
}

std::vector<MetaRecord> load_meta_records(const std::string& path) { return parse_meta_records(read_file(path)); }

}  // namespace saia
