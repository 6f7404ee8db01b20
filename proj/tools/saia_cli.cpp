#include <csignal>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "saia/config.hpp"
#include "saia/error.hpp"
#include "saia/fusion.hpp"
#include "saia/transport.hpp"
#include "saia/workflow.hpp"

namespace {

using StageFn = saia::StageIo (*)(const saia::ExperimentConfig&, const saia::Workspace&);

struct Options {
    std::string config;
    std::string out = "out";
    std::vector<std::string> overrides;
    std::string endpoint;
};

int serve(const saia::ExperimentConfig& cfg, const saia::Workspace& ws, const std::string& endpoint_text) {
    saia::Endpoint endpoint;
    if (!endpoint_text.empty()) {
        endpoint = saia::parse_endpoint(endpoint_text);
    } else if (cfg.run.endpoint) {
        endpoint = *cfg.run.endpoint;
    }
    if (!std::filesystem::exists(ws.ensemble())) {
        throw saia::Error(saia::ErrorKind::IoError, ws.ensemble().string() + " is missing; run export-posteriors first");
    }
    const auto ensemble = saia::load_ensemble_manifest(ws.ensemble().string());

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    auto server = saia::serve_ensemble(ensemble, endpoint);
    std::printf("listening %s\n", server->endpoint().to_string().c_str());
    std::fflush(stdout);
    int sig = 0;
    sigwait(&signals, &sig);
    server->stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Split AI pipeline: preparation and operation stages"};
    app.require_subcommand(1);
    Options opt;

    struct Command {
        const char* name;
        const char* help;
        StageFn fn;
    };
    const std::vector<Command> commands{
        {"prepare-features", "generate or extract client features and split them", saia::prepare_features},
        {"train-embedded", "train the embedded classifier", saia::train_embedded},
        {"export-posteriors", "train server models and write posterior tables", saia::export_posteriors},
        {"gen-meta", "build meta-feature records for the decision unit", saia::gen_meta},
        {"train-du", "train the decision unit", saia::train_du_stage},
        {"run", "route the test split through the decision unit",
         [](const saia::ExperimentConfig& c, const saia::Workspace& w) { return saia::run_stage(c, w); }},
        {"sweep", "retrain the decision unit over the epsilon grid", saia::sweep_stage},
        {"baseline", "random routing at matched send fractions", saia::baseline_stage},
        {"report", "summarize sweep and baseline results",
         [](const saia::ExperimentConfig& c, const saia::Workspace& w) {
             std::string text;
             auto io = saia::report_stage(c, w, &text);
             std::cout << text;
             return io;
         }},
    };

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", opt.config, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("-o,--out", opt.out, "output directory");
        sub->add_option("-s,--set", opt.overrides, "override, key=value (repeatable)");
    };
    std::vector<std::pair<CLI::App*, StageFn>> stage_subs;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        add_common(sub);
        stage_subs.emplace_back(sub, c.fn);
    }
    auto* serve_sub = app.add_subcommand("serve", "answer ensemble predictions over TCP until SIGINT/SIGTERM");
    add_common(serve_sub);
    serve_sub->add_option("-e,--endpoint", opt.endpoint, "host:port to bind (port 0 picks one)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "UsageError: " << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        const auto cfg = opt.config.empty() ? saia::parse_config("{}", opt.overrides)
                                            : saia::load_config(opt.config, opt.overrides);
        const saia::Workspace ws(opt.out);
        if (serve_sub->parsed()) return serve(cfg, ws, opt.endpoint);
        for (const auto& [sub, fn] : stage_subs) {
            if (!sub->parsed()) continue;
            const auto io = fn(cfg, ws);
            saia::write_manifest(cfg, ws, sub->get_name(), io);
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
