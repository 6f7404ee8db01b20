#include "saia/config.hpp"

#include <filesystem>

#include <json.hpp>

#include "saia/error.hpp"
#include "saia/text.hpp"

namespace saia {

using nlohmann::json;

namespace {

TrainConfig embedded_defaults() {
    TrainConfig t;
    t.rounds = 60;
    t.max_depth = 3;
    t.learning_rate = 0.1;
    return t;
}

TrainConfig server_defaults() {
    TrainConfig t;
    t.rounds = 100;
    t.max_depth = 4;
    t.learning_rate = 0.1;
    return t;
}

TrainConfig du_defaults() {
    TrainConfig t;
    t.rounds = 50;
    t.max_depth = 3;
    t.learning_rate = 0.1;
    t.min_child_hessian = 20.0;
    return t;
}

ExperimentConfig defaults() {
    ExperimentConfig c;
    c.embedded = embedded_defaults();
    c.server.train = server_defaults();
    c.du.train = du_defaults();
    return c;
}

const char* objective_name(Objective o) {
    switch (o) {
        case Objective::Auto: return "auto";
        case Objective::Logistic: return "logistic";
        case Objective::Softmax: return "softmax";
    }
    return "auto";
}

Objective parse_objective(const std::string& s) {
    if (s == "auto") return Objective::Auto;
    if (s == "logistic") return Objective::Logistic;
    if (s == "softmax") return Objective::Softmax;
    throw Error(ErrorKind::ConfigError, "unknown objective '" + s + "'");
}

const char* mapping_name(LbpMapping m) {
    switch (m) {
        case LbpMapping::None: return "none";
        case LbpMapping::Uniform: return "uniform";
        case LbpMapping::RotationInvariantUniform: return "riu2";
    }
    return "riu2";
}

json train_json(const TrainConfig& t) {
    return {{"objective", objective_name(t.objective)},
            {"rounds", t.rounds},
            {"max_depth", t.max_depth},
            {"min_child_hessian", t.min_child_hessian},
            {"lambda", t.lambda},
            {"gamma", t.gamma},
            {"learning_rate", t.learning_rate},
            {"dart_drop_rate", t.dart_drop_rate}};
}

TrainConfig train_from(const json& j) {
    TrainConfig t;
    t.objective = parse_objective(j.at("objective").get<std::string>());
    t.rounds = j.at("rounds").get<int>();
    t.max_depth = j.at("max_depth").get<int>();
    t.min_child_hessian = j.at("min_child_hessian").get<double>();
    t.lambda = j.at("lambda").get<double>();
    t.gamma = j.at("gamma").get<double>();
    t.learning_rate = j.at("learning_rate").get<double>();
    t.dart_drop_rate = j.at("dart_drop_rate").get<double>();
    return t;
}

json to_json(const ExperimentConfig& c) {
    const auto& s = c.synthetic;
    std::vector<std::string> augment;
    for (auto op : c.images.augment) augment.push_back(augment_op_name(op));
    return {
        {"seed", c.seed},
        {"source", c.source == DataSource::Synthetic ? "synthetic" : "images"},
        {"synthetic",
         {{"samples", s.samples},
          {"classes", s.classes},
          {"latent_dims", s.latent_dims},
          {"separation", s.separation},
          {"weak_dims", s.weak_dims},
          {"weak_noise", s.weak_noise},
          {"nuisance_dims", s.nuisance_dims},
          {"strong_views", s.strong_views},
          {"strong_noise", s.strong_noise},
          {"label_noise", s.label_noise}}},
        {"images", {{"list", c.images.list}, {"classes", c.images.classes}, {"augment", augment}}},
        {"features",
         {{"lbp_points", c.features.lbp_points},
          {"lbp_radius", c.features.lbp_radius},
          {"lbp_mapping", mapping_name(c.features.lbp_mapping)},
          {"polarity", c.features.polarity == Polarity::DarkRoi ? "dark" : "bright"}}},
        {"split",
         {{"train_fraction", c.split.train_fraction},
          {"meta_fraction", c.split.meta_fraction},
          {"test_fraction", c.split.test_fraction}}},
        {"embedded", train_json(c.embedded)},
        {"server",
         {{"models", c.server.models},
          {"bootstrap", c.server.bootstrap},
          {"tables", c.server.tables},
          {"train", train_json(c.server.train)}}},
        {"du",
         {{"epsilon", c.du.epsilon},
          {"threshold", c.du.threshold},
          {"jitter_copies", c.du.jitter_copies},
          {"jitter_sigma", c.du.jitter_sigma},
          {"train", train_json(c.du.train)}}},
        {"run",
         {{"comm_available", c.run.comm_available},
          {"threshold", c.run.threshold},
          {"cost", {{"t_client", c.run.cost.t_client}, {"t_server", c.run.cost.t_server}}},
          {"transport", c.run.endpoint ? c.run.endpoint->to_string() : "in-process"},
          {"fallback_on_failure", c.run.fallback_on_failure}}},
        {"sweep", {{"epsilons", c.epsilons}}},
        {"baseline", {{"trials", c.baseline_trials}, {"fractions", c.baseline_fractions}}},
    };
}

ExperimentConfig from_json(const json& j) {
    ExperimentConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto source = j.at("source").get<std::string>();
    if (source == "synthetic") {
        c.source = DataSource::Synthetic;
    } else if (source == "images") {
        c.source = DataSource::Images;
    } else {
        throw Error(ErrorKind::ConfigError, "source must be 'synthetic' or 'images'");
    }

    const auto& s = j.at("synthetic");
    c.synthetic.samples = s.at("samples").get<int>();
    c.synthetic.classes = s.at("classes").get<int>();
    c.synthetic.latent_dims = s.at("latent_dims").get<int>();
    c.synthetic.separation = s.at("separation").get<double>();
    c.synthetic.weak_dims = s.at("weak_dims").get<int>();
    c.synthetic.weak_noise = s.at("weak_noise").get<double>();
    c.synthetic.nuisance_dims = s.at("nuisance_dims").get<int>();
    c.synthetic.strong_views = s.at("strong_views").get<int>();
    c.synthetic.strong_noise = s.at("strong_noise").get<double>();
    c.synthetic.label_noise = s.at("label_noise").get<double>();
    c.synthetic.seed = c.seed;

    const auto& im = j.at("images");
    c.images.list = im.at("list").get<std::string>();
    c.images.classes = im.at("classes").get<int>();
    for (const auto& op : im.at("augment")) c.images.augment.push_back(parse_augment_op(op.get<std::string>()));

    const auto& f = j.at("features");
    c.features.lbp_points = f.at("lbp_points").get<int>();
    c.features.lbp_radius = f.at("lbp_radius").get<double>();
    c.features.lbp_mapping = parse_lbp_mapping(f.at("lbp_mapping").get<std::string>());
    const auto polarity = f.at("polarity").get<std::string>();
    if (polarity != "dark" && polarity != "bright") throw Error(ErrorKind::ConfigError, "polarity must be dark or bright");
    c.features.polarity = polarity == "dark" ? Polarity::DarkRoi : Polarity::BrightRoi;

    const auto& sp = j.at("split");
    c.split.train_fraction = sp.at("train_fraction").get<double>();
    c.split.meta_fraction = sp.at("meta_fraction").get<double>();
    c.split.test_fraction = sp.at("test_fraction").get<double>();
    c.split.seed = mix_seed(c.seed, 1);

    c.embedded = train_from(j.at("embedded"));
    c.embedded.seed = mix_seed(c.seed, 2);

    const auto& sv = j.at("server");
    c.server.models = sv.at("models").get<int>();
    c.server.bootstrap = sv.at("bootstrap").get<bool>();
    c.server.tables = sv.at("tables").get<std::string>();
    c.server.train = train_from(sv.at("train"));
    c.server.train.seed = mix_seed(c.seed, 3);

    const auto& du = j.at("du");
    c.du.epsilon = du.at("epsilon").get<double>();
    c.du.threshold = du.at("threshold").get<double>();
    c.du.jitter_copies = du.at("jitter_copies").get<int>();
    c.du.jitter_sigma = du.at("jitter_sigma").get<double>();
    c.du.train = train_from(du.at("train"));
    c.du.train.seed = mix_seed(c.seed, 4);

    const auto& run = j.at("run");
    c.run.comm_available = run.at("comm_available").get<bool>();
    c.run.threshold = run.at("threshold").get<double>();
    c.run.cost.t_client = run.at("cost").at("t_client").get<double>();
    c.run.cost.t_server = run.at("cost").at("t_server").get<double>();
    const auto transport = run.at("transport").get<std::string>();
    if (transport != "in-process") c.run.endpoint = parse_endpoint(transport);
    c.run.fallback_on_failure = run.at("fallback_on_failure").get<bool>();
    c.run.seed = mix_seed(c.seed, 5);

    c.epsilons = j.at("sweep").at("epsilons").get<std::vector<double>>();
    c.baseline_trials = j.at("baseline").at("trials").get<int>();
    c.baseline_fractions = j.at("baseline").at("fractions").get<std::vector<double>>();
    return c;
}

void merge_into(json& base, const json& patch, const std::string& where) {
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        const std::string key = where.empty() ? it.key() : where + "." + it.key();
        if (!base.contains(it.key())) throw Error(ErrorKind::ConfigError, "unknown config key '" + key + "'");
        auto& slot = base[it.key()];
        if (slot.is_object()) {
            if (!it.value().is_object()) throw Error(ErrorKind::ConfigError, "'" + key + "' must be an object");
            merge_into(slot, it.value(), key);
        } else {
            slot = it.value();
        }
    }
}

json override_patch(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::ConfigError, "override must be key=value: " + text);
    const std::string value_text = text.substr(eq + 1);
    json value = json::parse(value_text, nullptr, false);
    if (value.is_discarded()) value = value_text;

    std::vector<std::string> path;
    std::size_t start = 0;
    const std::string key = text.substr(0, eq);
    while (start <= key.size()) {
        const auto dot = key.find('.', start);
        path.push_back(key.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    json patch = value;
    for (auto it = path.rbegin(); it != path.rend(); ++it) patch = json{{*it, patch}};
    return patch;
}

}  // namespace

void ExperimentConfig::validate() const {
    try {
        split.validate();
        embedded.validate();
        server.train.validate();
        du.validate();
        du.train.validate();
        run.validate();
        if (source == DataSource::Synthetic) synthetic.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::ConfigError, e.what());
    }
    if (server.models < 1) throw Error(ErrorKind::ConfigError, "server.models must be >= 1");
    if (epsilons.empty()) throw Error(ErrorKind::ConfigError, "sweep.epsilons is empty");
    for (double e : epsilons) {
        if (!(e >= 0.0)) throw Error(ErrorKind::ConfigError, "sweep epsilons must be >= 0");
    }
    if (baseline_trials < 1) throw Error(ErrorKind::ConfigError, "baseline.trials must be >= 1");
    if (source == DataSource::Images && images.list.empty()) throw Error(ErrorKind::ConfigError, "images.list is required");
}

ExperimentConfig parse_config(const std::string& json_text, const std::vector<std::string>& overrides) {
    json merged = to_json(defaults());
    try {
        const json user = json::parse(json_text);
        if (!user.is_object()) throw Error(ErrorKind::ConfigError, "config must be a JSON object");
        merge_into(merged, user, "");
        for (const auto& o : overrides) merge_into(merged, override_patch(o), "");
        auto cfg = from_json(merged);
        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigError, e.what());
    }
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    auto cfg = parse_config(read_file(path), overrides);
    const auto base = std::filesystem::path(path).parent_path();
    for (std::string* p : {&cfg.images.list, &cfg.server.tables}) {
        if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).string();
    }
    return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) { return to_json(cfg).dump(2); }

std::uint64_t config_hash(const ExperimentConfig& cfg) { return fnv1a64(to_json(cfg).dump()); }

}  // namespace saia
