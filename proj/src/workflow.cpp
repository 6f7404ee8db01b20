#include "saia/workflow.hpp"

#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "saia/decision_unit.hpp"
#include "saia/error.hpp"
#include "saia/preprocess.hpp"
#include "saia/random.hpp"
#include "saia/synthetic.hpp"
#include "saia/text.hpp"

namespace saia {

namespace fs = std::filesystem;
using nlohmann::json;

Workspace::Workspace(fs::path dir) : dir_(std::move(dir)) {}

fs::path Workspace::sweep_du(double epsilon) const {
    return dir_ / "sweep_du" / ("eps_" + format_double(epsilon) + ".model");
}

int class_count(const ExperimentConfig& cfg) {
    return cfg.source == DataSource::Synthetic ? cfg.synthetic.classes : cfg.images.classes;
}

namespace {

std::string path_str(const fs::path& p) { return p.string(); }

Dataset load(const fs::path& p, int m) { return load_dataset_csv(path_str(p), m); }

void save(const Dataset& ds, const fs::path& p) { save_dataset_csv(ds, path_str(p)); }

void ensure_dir(const Workspace& ws) {
    std::error_code ec;
    fs::create_directories(ws.dir(), ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + ws.dir().string() + ": " + ec.message());
}

void require(const fs::path& p, const char* stage) {
    if (!fs::exists(p)) throw Error(ErrorKind::IoError, p.string() + " is missing; run " + stage + " first");
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string base_id(const std::string& id) { return id.substr(0, id.find('~')); }

Dataset prepare_images(const ExperimentConfig& cfg, std::optional<Dataset>* augmented) {
    const fs::path list(cfg.images.list);
    std::istringstream in(read_file(cfg.images.list));
    std::string line;
    std::optional<Dataset> out;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r" || (line_no == 1 && line.rfind("path,", 0) == 0)) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 2) throw Error(ErrorKind::MalformedRow, "image list line " + std::to_string(line_no));
        auto label = parse_int(f[1]);
        if (!label) throw Error(ErrorKind::MalformedRow, "image list line " + std::to_string(line_no) + ": bad label");
        fs::path img_path(std::string{f[0]});
        if (img_path.is_relative()) img_path = list.parent_path() / img_path;
        const auto img = load_ppm(img_path.string());
        const auto bundle = extract_features(img, cfg.features);
        const std::string id = img_path.stem().string();
        const int width = static_cast<int>(bundle.concat().size());
        if (!out) out.emplace(cfg.images.classes, width);
        out->add({id, bundle.concat(), static_cast<int>(*label)});
        for (auto op : cfg.images.augment) {
            const auto extra = extract_features(apply_augment(img, op), cfg.features);
            if (!*augmented) augmented->emplace(cfg.images.classes, width);
            (*augmented)->add({id + "~" + augment_op_name(op), extra.concat(), static_cast<int>(*label)});
        }
    }
    if (!out) throw Error(ErrorKind::ConfigError, "image list " + cfg.images.list + " is empty");
    return std::move(*out);
}

Dataset bootstrap(const Dataset& ds, std::uint64_t seed) {
    Rng rng(seed);
    Dataset out(ds.class_count(), ds.feature_count());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        Sample s = ds[rng.index(ds.size())];
        s.id += "#" + std::to_string(i);
        out.add(std::move(s));
    }
    return out;
}

}  // namespace

StageIo prepare_features(const ExperimentConfig& cfg, const Workspace& ws) {
    ensure_dir(ws);
    StageIo io;
    Dataset client(class_count(cfg), 1);
    if (cfg.source == DataSource::Synthetic) {
        auto data = make_synthetic(cfg.synthetic);
        for (std::size_t k = 0; k < data.strong.size(); ++k) {
            save(data.strong[k], ws.strong(static_cast<int>(k)));
            io.outputs.push_back(ws.strong(static_cast<int>(k)));
        }
        client = std::move(data.client);
    } else {
        io.inputs.push_back(cfg.images.list);
        std::optional<Dataset> augmented;
        client = prepare_images(cfg, &augmented);
        if (augmented) {
            save(*augmented, ws.client_augmented());
            io.outputs.push_back(ws.client_augmented());
        }
    }
    save(client, ws.client());
    const auto split = split_dataset(client, cfg.split);
    save(split.train, ws.train());
    save(split.meta, ws.meta());
    save(split.test, ws.test());
    for (const auto& p : {ws.client(), ws.train(), ws.meta(), ws.test()}) io.outputs.push_back(p);
    return io;
}

StageIo train_embedded(const ExperimentConfig& cfg, const Workspace& ws) {
    require(ws.train(), "prepare-features");
    StageIo io{{ws.train()}, {ws.embedded_model()}};
    Dataset train = load(ws.train(), class_count(cfg));
    if (fs::exists(ws.client_augmented()) && cfg.source == DataSource::Images && !cfg.images.augment.empty()) {
        io.inputs.push_back(ws.client_augmented());
        std::set<std::string> train_ids;
        for (const auto& s : train) train_ids.insert(s.id);
        for (const auto& s : load(ws.client_augmented(), class_count(cfg))) {
            if (train_ids.count(base_id(s.id))) train.add(s);
        }
    }
    save_model(fit(train, cfg.embedded), path_str(ws.embedded_model()));
    return io;
}

StageIo export_posteriors(const ExperimentConfig& cfg, const Workspace& ws) {
    ensure_dir(ws);
    const int m = class_count(cfg);
    StageIo io;
    std::vector<PosteriorTable> tables;
    if (!cfg.server.tables.empty()) {
        io.inputs.push_back(cfg.server.tables);
        tables = load_posterior_tables(cfg.server.tables);
    } else {
        require(ws.train(), "prepare-features");
        io.inputs.push_back(ws.train());
        const Dataset train = load(ws.train(), m);
        const bool synthetic = cfg.source == DataSource::Synthetic;
        if (!synthetic) io.inputs.push_back(ws.client());
        for (int k = 0; k < cfg.server.models; ++k) {
            const fs::path view_path = synthetic ? ws.strong(k % cfg.synthetic.strong_views) : ws.client();
            require(view_path, "prepare-features");
            if (synthetic) io.inputs.push_back(view_path);
            const Dataset view = load(view_path, m);
            const Dataset rows = select_like(view, train);
            TrainConfig tc = cfg.server.train;
            tc.seed = mix_seed(cfg.server.train.seed, static_cast<std::uint64_t>(k));
            const auto model = fit(cfg.server.bootstrap ? bootstrap(rows, mix_seed(tc.seed, 1)) : rows, tc);
            save_model(model, path_str(ws.server_model(k)));
            io.outputs.push_back(ws.server_model(k));
            PosteriorTable table("server" + std::to_string(k), m);
            for (const auto& s : view) table.insert(s.id, model.predict_proba(s));
            tables.push_back(std::move(table));
        }
    }
    write_file(path_str(ws.posteriors()), posterior_tables_to_csv(tables));
    json oracles = json::array();
    for (const auto& t : tables) {
        oracles.push_back({{"name", t.model_name()}, {"table", "posteriors.csv"}, {"model_name", t.model_name()}});
    }
    write_file(path_str(ws.ensemble()), json{{"oracles", oracles}}.dump(2) + "\n");
    io.outputs.push_back(ws.posteriors());
    io.outputs.push_back(ws.ensemble());
    return io;
}

StageIo gen_meta(const ExperimentConfig& cfg, const Workspace& ws) {
    require(ws.embedded_model(), "train-embedded");
    require(ws.ensemble(), "export-posteriors");
    require(ws.meta(), "prepare-features");
    const int m = class_count(cfg);
    const auto embedded = load_model(path_str(ws.embedded_model()));
    const auto ensemble = load_ensemble_manifest(path_str(ws.ensemble()));
    save_meta_records(generate_meta(embedded, ensemble, load(ws.meta(), m)), path_str(ws.meta_train()));
    save_meta_records(generate_meta(embedded, ensemble, load(ws.test(), m)), path_str(ws.meta_test()));
    return {{ws.embedded_model(), ws.ensemble(), ws.posteriors(), ws.meta(), ws.test()},
            {ws.meta_train(), ws.meta_test()}};
}

StageIo train_du_stage(const ExperimentConfig& cfg, const Workspace& ws) {
    require(ws.meta_train(), "gen-meta");
    save_model(train_du(load_meta_records(path_str(ws.meta_train())), cfg.du), path_str(ws.du_model()));
    return {{ws.meta_train()}, {ws.du_model()}};
}

std::unique_ptr<EnsembleClient> make_client(const ExperimentConfig& cfg, const Ensemble* ensemble) {
    if (cfg.run.endpoint) return std::make_unique<SocketClient>(*cfg.run.endpoint, class_count(cfg));
    if (!ensemble) throw Error(ErrorKind::InvalidArgument, "in-process transport needs an ensemble");
    return std::make_unique<InProcessClient>(*ensemble);
}

StageIo run_stage(const ExperimentConfig& cfg, const Workspace& ws, RunResult* result_out) {
    require(ws.test(), "prepare-features");
    require(ws.embedded_model(), "train-embedded");
    require(ws.du_model(), "train-du");
    StageIo io{{ws.test(), ws.embedded_model(), ws.du_model()}, {ws.run_outcomes(), ws.run_record(), ws.file("run_status.json")}};
    const int m = class_count(cfg);
    const Dataset test = load(ws.test(), m);
    const auto embedded = load_model(path_str(ws.embedded_model()));
    const auto du = load_model(path_str(ws.du_model()));

    std::optional<Ensemble> ensemble;
    if (!cfg.run.endpoint) {
        require(ws.ensemble(), "export-posteriors");
        ensemble = load_ensemble_manifest(path_str(ws.ensemble()));
        io.inputs.push_back(ws.ensemble());
        io.inputs.push_back(ws.posteriors());
    }
    auto client = make_client(cfg, ensemble ? &*ensemble : nullptr);

    std::unordered_map<std::string, int> labels;
    const bool have_labels = fs::exists(ws.meta_test());
    if (have_labels) {
        io.inputs.push_back(ws.meta_test());
        for (const auto& r : load_meta_records(path_str(ws.meta_test()))) {
            if (r.routing_label) labels.emplace(r.id, *r.routing_label);
        }
    }
    auto result = run_split(test, embedded, du, *client, cfg.run, have_labels ? &labels : nullptr);
    result.record.epsilon = cfg.du.epsilon;

    std::string outcomes = "id,label,embedded,route,du_score,final\n";
    for (const auto& o : result.outcomes) {
        outcomes += o.id + "," + std::to_string(o.true_label) + "," + std::to_string(o.embedded_pred) + "," +
                    (o.decision.route == Route::SendToServer ? "send" : "keep") + "," +
                    format_double(o.decision.du_score) + "," + std::to_string(o.final_pred) + "\n";
    }
    write_file(path_str(ws.run_outcomes()), outcomes);
    write_file(path_str(ws.run_record()), sweep_to_csv({result.record}));
    if (!result.valid) {
        write_file(path_str(ws.file("run_status.json")),
                   json{{"valid", false}, {"error", result.error}, {"processed", result.outcomes.size()}}.dump() + "\n");
        throw Error(ErrorKind::TransportFailure, "run aborted after " + std::to_string(result.outcomes.size()) +
                                                     " samples; partial report marked invalid: " + result.error);
    }
    write_file(path_str(ws.file("run_status.json")),
               json{{"valid", true}, {"processed", result.outcomes.size()}}.dump() + "\n");
    if (result_out) *result_out = std::move(result);
    return io;
}

StageIo sweep_stage(const ExperimentConfig& cfg, const Workspace& ws) {
    if (!fs::exists(ws.train()) || !fs::exists(ws.meta()) || !fs::exists(ws.test())) prepare_features(cfg, ws);
    if (!fs::exists(ws.embedded_model())) train_embedded(cfg, ws);
    if (!fs::exists(ws.ensemble())) export_posteriors(cfg, ws);
    if (!fs::exists(ws.meta_train()) || !fs::exists(ws.meta_test())) gen_meta(cfg, ws);

    const int m = class_count(cfg);
    StageIo io{{ws.test(), ws.embedded_model(), ws.ensemble(), ws.posteriors(), ws.meta_train(), ws.meta_test()},
               {ws.sweep(), ws.accuracy()}};
    const Dataset test = load(ws.test(), m);
    const auto embedded = load_model(path_str(ws.embedded_model()));
    const auto ensemble = load_ensemble_manifest(path_str(ws.ensemble()));
    const auto meta_train = load_meta_records(path_str(ws.meta_train()));
    const auto meta_test = load_meta_records(path_str(ws.meta_test()));
    auto client = make_client(cfg, &ensemble);

    std::vector<GbdtModel> dus;
    const auto records = epsilon_sweep(cfg.epsilons, {test, embedded, meta_train, meta_test}, cfg.du, *client, cfg.run, &dus);
    fs::create_directories(ws.dir() / "sweep_du");
    for (std::size_t i = 0; i < dus.size(); ++i) {
        save_model(dus[i], path_str(ws.sweep_du(cfg.epsilons[i])));
        io.outputs.push_back(ws.sweep_du(cfg.epsilons[i]));
    }
    write_file(path_str(ws.sweep()), sweep_to_csv(records));
    const double emb = embedded_accuracy(test, embedded);
    const double net = networked_accuracy(test, *client);
    write_file(path_str(ws.accuracy()), json{{"embedded", emb}, {"networked", net}}.dump(2) + "\n");
    return io;
}

StageIo baseline_stage(const ExperimentConfig& cfg, const Workspace& ws) {
    std::vector<double> fractions = cfg.baseline_fractions;
    StageIo io;
    if (fractions.empty()) {
        if (!fs::exists(ws.sweep())) sweep_stage(cfg, ws);
        io.inputs.push_back(ws.sweep());
        for (const auto& r : parse_sweep_csv(read_file(path_str(ws.sweep())))) fractions.push_back(r.fraction_sent);
    }
    require(ws.test(), "prepare-features");
    require(ws.embedded_model(), "train-embedded");
    require(ws.ensemble(), "export-posteriors");
    for (const auto& p : {ws.test(), ws.embedded_model(), ws.ensemble(), ws.posteriors()}) io.inputs.push_back(p);

    const Dataset test = load(ws.test(), class_count(cfg));
    const auto embedded = load_model(path_str(ws.embedded_model()));
    const auto ensemble = load_ensemble_manifest(path_str(ws.ensemble()));
    auto client = make_client(cfg, &ensemble);
    std::vector<int> truth, emb, net;
    for (const auto& s : test) {
        truth.push_back(*s.label);
        emb.push_back(argmax_class(embedded.predict_proba(s)));
        net.push_back(client->predict(s).label);
    }
    std::string out = "fraction,mean,stddev,trials\n";
    for (double f : fractions) {
        const auto b = random_baseline(truth, emb, net, f, cfg.baseline_trials, mix_seed(cfg.seed, 6));
        out += format_double(b.fraction) + "," + format_double(b.mean) + "," + format_double(b.stddev) + "," +
               std::to_string(b.trials) + "\n";
    }
    write_file(path_str(ws.baseline()), out);
    io.outputs.push_back(ws.baseline());
    return io;
}

std::vector<BaselineResult> parse_baseline_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "fraction,mean,stddev,trials") {
        throw Error(ErrorKind::MalformedRow, "bad baseline header");
    }
    std::vector<BaselineResult> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 4) throw Error(ErrorKind::MalformedRow, "baseline row needs 4 fields");
        auto fr = parse_double(f[0]), mean = parse_double(f[1]), sd = parse_double(f[2]);
        auto trials = parse_int(f[3]);
        if (!fr || !mean || !sd || !trials) throw Error(ErrorKind::MalformedRow, "non-numeric baseline field");
        out.push_back({*fr, *mean, *sd, static_cast<int>(*trials)});
    }
    return out;
}

StageIo report_stage(const ExperimentConfig& /*cfg*/, const Workspace& ws, std::string* text_out) {
    require(ws.sweep(), "sweep");
    StageIo io{{ws.sweep()}, {ws.report()}};
    const auto records = parse_sweep_csv(read_file(path_str(ws.sweep())));
    std::string text = sweep_summary(records);
    if (fs::exists(ws.accuracy())) {
        io.inputs.push_back(ws.accuracy());
        const auto acc = json::parse(read_file(path_str(ws.accuracy())));
        char buf[128];
        std::snprintf(buf, sizeof buf, "embedded-only %.2f%%  networked-only %.2f%%\n",
                      100.0 * acc.at("embedded").get<double>(), 100.0 * acc.at("networked").get<double>());
        text += buf;
    }
    if (fs::exists(ws.baseline())) {
        io.inputs.push_back(ws.baseline());
        std::map<double, BaselineResult> by_fraction;
        for (const auto& b : parse_baseline_csv(read_file(path_str(ws.baseline())))) by_fraction[b.fraction] = b;
        for (const auto& r : records) {
            auto it = by_fraction.find(r.fraction_sent);
            if (it == by_fraction.end()) continue;
            char buf[160];
            std::snprintf(buf, sizeof buf, "eps=%-6g du=%6.2f%% random=%6.2f%% +- %.2f\n", r.epsilon,
                          100.0 * r.accuracy, 100.0 * it->second.mean, 100.0 * it->second.stddev);
            text += buf;
        }
    }
    write_file(path_str(ws.report()), text);
    if (text_out) *text_out = std::move(text);
    return io;
}

void write_manifest(const ExperimentConfig& cfg, const Workspace& ws, const std::string& command, const StageIo& io) {
    auto hashes = [&](const std::vector<fs::path>& files) {
        json out = json::object();
        for (const auto& p : files) {
            if (!fs::exists(p)) continue;
            const auto rel = p.lexically_relative(ws.dir());
            const std::string key = rel.empty() || rel.string().rfind("..", 0) == 0 ? p.string() : rel.string();
            out[key] = hex64(fnv1a64(read_file(p.string())));
        }
        return out;
    };
    const json manifest{{"command", command},
                        {"config_hash", hex64(config_hash(cfg))},
                        {"seed", cfg.seed},
                        {"inputs", hashes(io.inputs)},
                        {"outputs", hashes(io.outputs)}};
    write_file(path_str(ws.manifest(command)), manifest.dump(2) + "\n");
}

}  // namespace saia
