// fedshot: federated few-shot seizure-detection experiment driver.
//
// Exit codes: 0 success, 2 configuration problem, 3 data problem,
// 4 numeric failure. Anything unexpected also maps to 4.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedshot/config.hpp"
#include "fedshot/errors.hpp"
#include "fedshot/pipeline.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha;
    std::optional<std::string> out_dir;
    std::vector<std::string> overrides;
};

void add_common_flags(CLI::App* sub, CliOptions& opt) {
    sub->add_option("--config", opt.config_path, "configuration file (key = value lines)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "override the run seed");
    sub->add_option("--alpha", opt.alpha,
                    "override the personalization blend weight in [0, 1]");
    sub->add_option("--out-dir", opt.out_dir, "override the output directory");
    sub->add_option("--set", opt.overrides,
                    "override any config key, as key=value (repeatable)");
}

fedshot::ExperimentConfig resolve_config(const CliOptions& opt, const std::string& mode) {
    fedshot::ExperimentConfig cfg;
    if (!opt.config_path.empty()) {
        cfg = fedshot::load_config(opt.config_path, cfg);
    }
    for (const auto& kv : opt.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw fedshot::ConfigError("--set expects key=value, got '" + kv + "'");
        }
        fedshot::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (opt.seed) {
        cfg.seed = *opt.seed;
    }
    if (opt.alpha) {
        cfg.alpha = *opt.alpha;
    }
    if (opt.out_dir) {
        cfg.out_dir = *opt.out_dir;
    }
    cfg.mode = mode;
    cfg.validate();
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated few-shot EEG seizure-detection pipeline"};
    app.require_subcommand(1);

    CliOptions opt;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    CLI::App* prep = app.add_subcommand("prep", "preprocess and embed segments");
    CLI::App* e1 = app.add_subcommand("e1", "stage 1: federated encoder fine-tuning");
    CLI::App* e2 = app.add_subcommand("e2", "stage 2: few-shot personalization");
    CLI::App* pca = app.add_subcommand("pca", "project task embeddings to 2-D");
    CLI::App* report = app.add_subcommand("report", "print the reports of a finished run");
    for (CLI::App* sub : {synth, prep, e1, e2, pca, report}) {
        add_common_flags(sub, opt);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::string mode = app.get_subcommands().front()->get_name();
    try {
        const fedshot::ExperimentConfig cfg = resolve_config(opt, mode);
        if (mode == "synth") {
            fedshot::cmd_synth(cfg, std::cout);
        } else if (mode == "prep") {
            fedshot::cmd_prep(cfg, std::cout);
        } else if (mode == "e1") {
            fedshot::cmd_e1(cfg, std::cout);
        } else if (mode == "e2") {
            fedshot::cmd_e2(cfg, std::cout);
        } else if (mode == "pca") {
            fedshot::cmd_pca(cfg, std::cout);
        } else {
            fedshot::cmd_report(cfg, std::cout);
        }
    } catch (const fedshot::Error& e) {
        std::cerr << "fedshot: error: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "fedshot: unexpected error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
