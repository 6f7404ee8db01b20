#include <sstream>

#include "saia/error.hpp"
#include "saia/gbdt.hpp"
#include "saia/text.hpp"

namespace saia {

namespace {

constexpr std::string_view kMagic = "saia-gbdt 1";

std::string_view objective_name(Objective o) {
    switch (o) {
        case Objective::Logistic: return "logistic";
        case Objective::Softmax: return "softmax";
        case Objective::Auto: break;
    }
    return "auto";
}

}  // namespace

GbdtModel::GbdtModel(Objective objective, int class_count, int feature_count, double learning_rate,
                     double base_score)
    : objective_(objective),
      class_count_(class_count),
      feature_count_(feature_count),
      learning_rate_(learning_rate),
      base_score_(base_score) {
    if (objective == Objective::Auto) throw Error(ErrorKind::InvalidArgument, "model objective must be resolved");
    if (objective == Objective::Logistic && class_count != 2) {
        throw Error(ErrorKind::ObjectiveMismatch, "logistic model must have two classes");
    }
    if (class_count < 2) throw Error(ErrorKind::InvalidArgument, "model needs at least two classes");
    if (feature_count <= 0) throw Error(ErrorKind::InvalidArgument, "model needs at least one feature");
}

void GbdtModel::add_round(std::vector<Tree> round_trees, double scale) {
    if (static_cast<int>(round_trees.size()) != groups()) {
        throw Error(ErrorKind::ArityMismatch, "round holds " + std::to_string(round_trees.size()) +
                                                  " trees, objective needs " + std::to_string(groups()));
    }
    if (!(scale > 0.0)) throw Error(ErrorKind::InvalidArgument, "tree scale must be positive");
    for (auto& t : round_trees) {
        trees_.push_back(std::move(t));
        scales_.push_back(scale);
    }
}

void GbdtModel::rescale_round(int round, double factor) {
    if (!(factor > 0.0)) throw Error(ErrorKind::InvalidArgument, "tree scale must stay positive");
    for (int c = 0; c < groups(); ++c) scales_[static_cast<std::size_t>(round * groups() + c)] *= factor;
}

std::vector<double> GbdtModel::margins(std::span<const double> features) const {
    if (static_cast<int>(features.size()) != feature_count_) {
        throw Error(ErrorKind::ArityMismatch, "model expects " + std::to_string(feature_count_) + " features, got " +
                                                  std::to_string(features.size()));
    }
    const int k = groups();
    std::vector<double> out(static_cast<std::size_t>(k), base_score_);
    for (std::size_t t = 0; t < trees_.size(); ++t) {
        out[t % k] += scales_[t] * learning_rate_ * trees_[t].predict(features);
    }
    return out;
}

PosteriorVector GbdtModel::predict_proba(std::span<const double> features) const {
    const auto m = margins(features);
    if (objective_ == Objective::Logistic) {
        const double p = sigmoid(m[0]);
        return PosteriorVector({1.0 - p, p});
    }
    return PosteriorVector(softmax(m));
}

std::vector<PosteriorVector> GbdtModel::predict_proba(const Dataset& ds) const {
    std::vector<PosteriorVector> out;
    out.reserve(ds.size());
    for (const auto& s : ds) out.push_back(predict_proba(s.features));
    return out;
}

std::string GbdtModel::serialize() const {
    std::string out(kMagic);
    out += "\nobjective ";
    out += objective_name(objective_);
    out += "\nnum_class " + std::to_string(class_count_);
    out += "\nnum_feature " + std::to_string(feature_count_);
    out += "\nlearning_rate " + format_double(learning_rate_);
    out += "\nbase_score " + format_double(base_score_);
    out += "\nnum_trees " + std::to_string(trees_.size()) + "\n";
    for (std::size_t t = 0; t < trees_.size(); ++t) {
        const auto nodes = trees_[t].nodes();
        out += "tree " + std::to_string(t) + " scale " + format_double(scales_[t]) + " nodes " +
               std::to_string(nodes.size()) + "\n";
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto& n = nodes[i];
            out += std::to_string(i) + "," + std::to_string(n.feature) + "," + format_double(n.threshold) + "," +
                   std::to_string(n.left) + "," + std::to_string(n.right) + "," + format_double(n.weight) + "\n";
        }
    }
    out += "end\n";
    return out;
}

namespace {

class LineReader {
public:
    explicit LineReader(const std::string& text) : in_(text) {}

    std::string next() {
        std::string line;
        if (!std::getline(in_, line)) throw Error(ErrorKind::MalformedModel, "unexpected end of model");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    }

    std::string value(std::string_view key) {
        const auto line = next();
        if (line.rfind(std::string(key) + " ", 0) != 0) {
            throw Error(ErrorKind::MalformedModel, "expected '" + std::string(key) + "', got '" + line + "'");
        }
        return line.substr(key.size() + 1);
    }

private:
    std::istringstream in_;
};

double need_double(std::string_view text) {
    auto v = parse_double(text);
    if (!v) throw Error(ErrorKind::MalformedModel, "bad number '" + std::string(text) + "'");
    return *v;
}

long long need_int(std::string_view text) {
    auto v = parse_int(text);
    if (!v) throw Error(ErrorKind::MalformedModel, "bad integer '" + std::string(text) + "'");
    return *v;
}

}  // namespace

GbdtModel GbdtModel::deserialize(const std::string& text) {
    LineReader r(text);
    if (r.next() != kMagic) throw Error(ErrorKind::MalformedModel, "missing model header");
    const auto objective_text = r.value("objective");
    Objective objective;
    if (objective_text == "logistic") {
        objective = Objective::Logistic;
    } else if (objective_text == "softmax") {
        objective = Objective::Softmax;
    } else {
        throw Error(ErrorKind::MalformedModel, "unknown objective " + objective_text);
    }
    const int m = static_cast<int>(need_int(r.value("num_class")));
    const int d = static_cast<int>(need_int(r.value("num_feature")));
    const double eta = need_double(r.value("learning_rate"));
    const double base = need_double(r.value("base_score"));
    const auto count = need_int(r.value("num_trees"));

    GbdtModel model(objective, m, d, eta, base);
    if (count < 0 || count % model.groups() != 0) throw Error(ErrorKind::MalformedModel, "bad tree count");

    std::vector<Tree> round;
    std::vector<double> round_scales;
    for (long long t = 0; t < count; ++t) {
        std::istringstream header(r.next());
        std::string tag, scale_tag, nodes_tag;
        long long index = 0, node_count = 0;
        std::string scale_text;
        header >> tag >> index >> scale_tag >> scale_text >> nodes_tag >> node_count;
        if (!header || tag != "tree" || index != t || scale_tag != "scale" || nodes_tag != "nodes" || node_count <= 0) {
            throw Error(ErrorKind::MalformedModel, "bad tree header for tree " + std::to_string(t));
        }
        std::vector<TreeNode> nodes;
        for (long long i = 0; i < node_count; ++i) {
            const auto line = r.next();
            const auto f = split_csv_line(line);
            if (f.size() != 6 || need_int(f[0]) != i) throw Error(ErrorKind::MalformedModel, "bad node line '" + line + "'");
            TreeNode n;
            n.feature = static_cast<int>(need_int(f[1]));
            n.threshold = need_double(f[2]);
            n.left = static_cast<int>(need_int(f[3]));
            n.right = static_cast<int>(need_int(f[4]));
            n.weight = need_double(f[5]);
            if (n.feature >= d) throw Error(ErrorKind::MalformedModel, "feature index out of range");
            nodes.push_back(n);
        }
        round.emplace_back(std::move(nodes));
        round_scales.push_back(need_double(scale_text));
        if (static_cast<int>(round.size()) == model.groups()) {
            const int r_index = model.rounds();
            model.add_round(std::move(round));
            for (int c = 0; c < model.groups(); ++c) {
                model.scales_[static_cast<std::size_t>(r_index * model.groups() + c)] = round_scales[c];
            }
            round.clear();
            round_scales.clear();
        }
    }
    if (r.next() != "end") throw Error(ErrorKind::MalformedModel, "missing end marker");
    for (double s : model.scales_) {
        if (!(s > 0.0)) throw Error(ErrorKind::MalformedModel, "non-positive tree scale");
    }
    return model;
}

void save_model(const GbdtModel& model, const std::string& path) { write_file(path, model.serialize()); }

GbdtModel load_model(const std::string& path) { return GbdtModel::deserialize(read_file(path)); }

}  // namespace saia
