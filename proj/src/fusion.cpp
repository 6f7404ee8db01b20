#include "saia/fusion.hpp"

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include <json.hpp>

#include "saia/error.hpp"
#include "saia/text.hpp"

namespace saia {

DecisionMatrix::DecisionMatrix(std::vector<PosteriorVector> rows, std::vector<std::string> classifier_ids)
    : rows_(std::move(rows)), ids_(std::move(classifier_ids)) {
    if (rows_.empty()) throw Error(ErrorKind::InvalidArgument, "decision matrix needs at least one classifier");
    for (const auto& r : rows_) {
        if (r.size() != rows_.front().size()) throw Error(ErrorKind::ArityMismatch, "decision matrix rows differ in length");
    }
    if (ids_.empty()) {
        for (std::size_t i = 0; i < rows_.size(); ++i) ids_.push_back("c" + std::to_string(i));
    }
    if (ids_.size() != rows_.size()) throw Error(ErrorKind::ArityMismatch, "one classifier id per row required");
}

FusionWeights::FusionWeights(std::vector<double> weights) : w_(std::move(weights)) {
    if (w_.empty()) throw Error(ErrorKind::InvalidArgument, "fusion weights are empty");
    bool any_positive = false;
    for (double v : w_) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "fusion weights must be finite and >= 0");
        any_positive = any_positive || v > 0.0;
    }
    if (!any_positive) throw Error(ErrorKind::InvalidArgument, "fusion weights are all zero");
}

FusionWeights FusionWeights::uniform(std::size_t k) {
    return FusionWeights(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

std::vector<double> fuse(const DecisionMatrix& dm, const FusionWeights& w) {
    if (w.size() != dm.classifiers()) {
        throw Error(ErrorKind::ArityMismatch, std::to_string(w.size()) + " weights for " +
                                                  std::to_string(dm.classifiers()) + " classifiers");
    }
    std::vector<double> scores(dm.classes(), 0.0);
    for (std::size_t c = 0; c < dm.classes(); ++c) {
        for (std::size_t i = 0; i < dm.classifiers(); ++i) scores[c] += w[i] * dm.row(i)[c];
    }
    return scores;
}

int decide(std::span<const double> scores) { return argmax_class(scores); }

PosteriorTable::PosteriorTable(std::string model_name, int class_count)
    : name_(std::move(model_name)), class_count_(class_count) {
    if (class_count < 1) throw Error(ErrorKind::InvalidArgument, "posterior table needs classes");
}

void PosteriorTable::insert(const std::string& id, PosteriorVector probs) {
    if (static_cast<int>(probs.size()) != class_count_) throw Error(ErrorKind::ArityMismatch, "posterior arity mismatch");
    if (!rows_.emplace(id, std::move(probs)).second) {
        throw Error(ErrorKind::DuplicateKey, "duplicate posterior row (" + id + ", " + name_ + ")");
    }
}

const PosteriorVector* PosteriorTable::find(const std::string& id) const {
    auto it = rows_.find(id);
    return it == rows_.end() ? nullptr : &it->second;
}

std::vector<PosteriorTable> parse_posterior_tables(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::MalformedRow, "posterior table missing header");
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "id" || header[1] != "model") {
        throw Error(ErrorKind::MalformedRow, "posterior header must start with id,model,p0");
    }
    const int m = static_cast<int>(header.size()) - 2;
    for (int c = 0; c < m; ++c) {
        if (header[c + 2] != "p" + std::to_string(c)) throw Error(ErrorKind::MalformedRow, "bad posterior column name");
    }

    std::vector<PosteriorTable> tables;
    std::map<std::string, std::size_t> by_name;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        const std::string where = "line " + std::to_string(line_no);
        if (f.size() != header.size()) throw Error(ErrorKind::MalformedRow, where + ": wrong field count");
        std::vector<double> probs;
        double sum = 0.0;
        for (int c = 0; c < m; ++c) {
            auto v = parse_double(f[c + 2]);
            if (!v || !(*v >= 0.0 && *v <= 1.0)) throw Error(ErrorKind::MalformedRow, where + ": bad probability");
            probs.push_back(*v);
            sum += *v;
        }
        if (std::abs(sum - 1.0) > 1e-3) {
            throw Error(ErrorKind::RowNotNormalized, where + ": probabilities sum to " + format_double(sum));
        }
        if (std::abs(sum - 1.0) > PosteriorVector::kSumTolerance) {
            for (double& p : probs) p /= sum;
        }
        const std::string name(f[1]);
        auto [it, inserted] = by_name.emplace(name, tables.size());
        if (inserted) tables.emplace_back(name, m);
        tables[it->second].insert(std::string(f[0]), PosteriorVector(std::move(probs)));
    }
    return tables;
}

std::vector<PosteriorTable> load_posterior_tables(const std::string& path) {
    return parse_posterior_tables(read_file(path));
}

std::string posterior_tables_to_csv(std::span<const PosteriorTable> tables) {
    if (tables.empty()) throw Error(ErrorKind::InvalidArgument, "no posterior tables to write");
    std::string out = "id,model";
    for (int c = 0; c < tables.front().class_count(); ++c) out += ",p" + std::to_string(c);
    out += '\n';
    for (const auto& t : tables) {
        if (t.class_count() != tables.front().class_count()) throw Error(ErrorKind::ArityMismatch, "mixed table arity");
        for (const auto& [id, p] : t.rows()) {
            out += id + "," + t.model_name();
            for (double v : p.probs()) out += "," + format_double(v);
            out += '\n';
        }
    }
    return out;
}

ClassifierOracle::ClassifierOracle(std::string name, PosteriorTable table)
    : name_(std::move(name)), source_(std::move(table)) {}

ClassifierOracle::ClassifierOracle(std::string name, GbdtModel model)
    : name_(std::move(name)), source_(std::move(model)) {}

int ClassifierOracle::class_count() const {
    return std::visit([](const auto& s) { return s.class_count(); }, source_);
}

PosteriorVector ClassifierOracle::query(const Sample& sample) const {
    if (const auto* table = std::get_if<PosteriorTable>(&source_)) {
        const PosteriorVector* p = table->find(sample.id);
        if (!p) throw Error(ErrorKind::MissingPrediction, "oracle " + name_ + " has no row for " + sample.id);
        return *p;
    }
    return std::get<GbdtModel>(source_).predict_proba(sample.features);
}

ClassifierOracle load_posterior_table(const std::string& path) {
    auto tables = load_posterior_tables(path);
    if (tables.size() != 1) {
        throw Error(ErrorKind::MalformedRow, path + " holds " + std::to_string(tables.size()) + " models, expected 1");
    }
    auto name = tables.front().model_name();
    return ClassifierOracle(std::move(name), std::move(tables.front()));
}

Ensemble::Ensemble(std::vector<ClassifierOracle> oracles, std::vector<double> weights)
    : oracles_(std::move(oracles)),
      weights_(weights.empty() ? FusionWeights::uniform(std::max<std::size_t>(oracles_.size(), 1))
                               : FusionWeights(std::move(weights))),
      class_count_(0) {
    if (oracles_.empty()) throw Error(ErrorKind::InvalidArgument, "ensemble needs at least one oracle");
    if (weights_.size() != oracles_.size()) throw Error(ErrorKind::ArityMismatch, "one weight per oracle required");
    class_count_ = oracles_.front().class_count();
    for (const auto& o : oracles_) {
        if (o.class_count() != class_count_) throw Error(ErrorKind::ArityMismatch, "oracles disagree on class count");
    }
}

DecisionMatrix Ensemble::decision_matrix(const Sample& sample) const {
    std::vector<PosteriorVector> rows;
    std::vector<std::string> ids;
    rows.reserve(oracles_.size());
    for (const auto& o : oracles_) {
        rows.push_back(o.query(sample));
        ids.push_back(o.name());
    }
    return DecisionMatrix(std::move(rows), std::move(ids));
}

EnsemblePrediction ensemble_predict(const Ensemble& ensemble, const Sample& sample) {
    EnsemblePrediction out;
    out.scores = fuse(ensemble.decision_matrix(sample), ensemble.weights());
    out.label = decide(out.scores);
    return out;
}

Ensemble load_ensemble_manifest(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ConfigError, path + ": " + e.what());
    }
    const auto base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return (fp.is_absolute() ? fp : base / fp).string();
    };
    if (!doc.contains("oracles") || !doc["oracles"].is_array()) {
        throw Error(ErrorKind::ConfigError, path + ": 'oracles' array required");
    }

    std::vector<ClassifierOracle> oracles;
    std::map<std::string, std::vector<PosteriorTable>> table_cache;
    for (const auto& entry : doc["oracles"]) {
        const std::string name = entry.value("name", "oracle" + std::to_string(oracles.size()));
        if (entry.contains("table")) {
            const auto file = resolve(entry["table"].get<std::string>());
            auto it = table_cache.find(file);
            if (it == table_cache.end()) it = table_cache.emplace(file, load_posterior_tables(file)).first;
            const auto wanted = entry.value("model_name", std::string());
            const PosteriorTable* chosen = nullptr;
            for (const auto& t : it->second) {
                if (wanted.empty() ? it->second.size() == 1 : t.model_name() == wanted) chosen = &t;
            }
            if (!chosen) throw Error(ErrorKind::ConfigError, "cannot select a table for oracle " + name + " in " + file);
            oracles.emplace_back(name, *chosen);
        } else if (entry.contains("model")) {
            oracles.emplace_back(name, load_model(resolve(entry["model"].get<std::string>())));
        } else {
            throw Error(ErrorKind::ConfigError, "oracle " + name + " needs 'table' or 'model'");
        }
    }
    std::vector<double> weights;
    if (doc.contains("weights")) weights = doc["weights"].get<std::vector<double>>();
    return Ensemble(std::move(oracles), std::move(weights));
}

}  // namespace saia
