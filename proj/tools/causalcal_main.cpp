#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "causalcal/experiment.hpp"
#include "causalcal/textio.hpp"

namespace {

using causalcal::ExperimentConfig;

struct CliOverrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;
    std::optional<std::size_t> jobs;
    bool print_config = false;
};

ExperimentConfig resolve_config(const CliOverrides& cli) {
    ExperimentConfig config;
    if (!cli.config_path.empty())
        config = causalcal::config_from_json_text(causalcal::read_file(cli.config_path));
    if (cli.seed) config.master_seed = *cli.seed;
    if (cli.output) config.output_dir = *cli.output;
    if (cli.jobs) config.jobs = *cli.jobs;
    config.validate();
    return config;
}

void add_common_flags(CLI::App* cmd, CliOverrides& cli) {
    cmd->add_option("--config", cli.config_path, "Experiment config file (JSON)");
    cmd->add_option("--seed", cli.seed, "Override master seed");
    cmd->add_option("--output", cli.output, "Override output directory");
    cmd->add_option("--jobs", cli.jobs, "Worker threads for bootstrap searches");
    cmd->add_flag("--print-config", cli.print_config, "Print the resolved config and exit");
}

template <typename Fn>
int run_stage(const char* stage, Fn&& fn) {
    try {
        fn();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: stage " << stage << " failed: " << e.what() << '\n';
        return 1;
    }
}

void for_each_cell(const ExperimentConfig& config,
                   const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    for (std::size_t rep = 0; rep < config.replications; ++rep)
        for (std::size_t ai = 0; ai < config.alphas.size(); ++ai)
            for (std::size_t ni = 0; ni < config.calibration_sizes.size(); ++ni) fn(rep, ai, ni);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Calibrated causal edge-type probabilities from observational data"};
    app.require_subcommand(1);

    CliOverrides cli;

    auto* simulate = app.add_subcommand("simulate", "Generate CBNs, sample data, mask latents");
    auto* bootstrap = app.add_subcommand("bootstrap", "Estimate edge-class distributions");
    auto* split = app.add_subcommand("split", "Stratified calibration train/test split");
    auto* calibrate = app.add_subcommand("calibrate", "Train the calibration ensemble");
    auto* evaluate = app.add_subcommand("evaluate", "Score before/after metrics on test pairs");
    auto* run_all = app.add_subcommand("run-all", "Full experiment, all stages and replications");
    auto* report = app.add_subcommand("report", "Aggregate table and significance sheet");
    for (auto* cmd : {simulate, bootstrap, split, calibrate, evaluate, run_all, report})
        add_common_flags(cmd, cli);

    CLI11_PARSE(app, argc, argv);

    ExperimentConfig config;
    try {
        config = resolve_config(cli);
    } catch (const std::exception& e) {
        std::cerr << "error: bad configuration: " << e.what() << '\n';
        return 1;
    }
    if (cli.print_config) {
        std::cout << causalcal::config_to_json_text(config);
        return 0;
    }

    if (simulate->parsed()) {
        return run_stage("simulate", [&] {
            for (std::size_t rep = 0; rep < config.replications; ++rep)
                causalcal::stage_simulate(config, rep);
        });
    }
    if (bootstrap->parsed()) {
        return run_stage("bootstrap", [&] {
            for (std::size_t rep = 0; rep < config.replications; ++rep)
                for (std::size_t ai = 0; ai < config.alphas.size(); ++ai)
                    causalcal::stage_bootstrap(config, rep, ai);
        });
    }
    if (split->parsed()) {
        return run_stage("split", [&] {
            for_each_cell(config, [&](std::size_t rep, std::size_t ai, std::size_t ni) {
                causalcal::stage_split(config, rep, ai, ni);
            });
        });
    }
    if (calibrate->parsed()) {
        return run_stage("calibrate", [&] {
            for_each_cell(config, [&](std::size_t rep, std::size_t ai, std::size_t ni) {
                causalcal::stage_calibrate(config, rep, ai, ni);
            });
        });
    }
    if (evaluate->parsed()) {
        return run_stage("evaluate", [&] {
            for_each_cell(config, [&](std::size_t rep, std::size_t ai, std::size_t ni) {
                causalcal::stage_evaluate(config, rep, ai, ni);
            });
        });
    }
    if (run_all->parsed()) {
        return run_stage("run-all", [&] {
            const causalcal::RunManifest manifest = causalcal::run_experiment(config);
            std::size_t failures = 0;
            for (const auto& status : manifest.statuses) {
                if (!status.ok) {
                    ++failures;
                    std::cerr << "replication " << status.replication << " failed: " << status.error
                              << '\n';
                }
            }
            std::cout << "completed " << (manifest.statuses.size() - failures) << "/"
                      << manifest.statuses.size() << " replications; outputs in "
                      << config.output_dir.string() << '\n';
            if (failures == manifest.statuses.size())
                throw std::runtime_error("all replications failed");
        });
    }
    if (report->parsed()) {
        return run_stage("report", [&] { causalcal::stage_report(config); });
    }
    return 0;
}
