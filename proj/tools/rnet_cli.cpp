// Command-line driver: one subcommand per experiment, plus `all`.
#include "rnet/experiments.hpp"
#include "rnet/results.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Flags {
    rnet::Seed seed = 0;
    std::optional<int> seeds;
    std::optional<int> nodes;
    std::optional<double> edge_prob;
    double lr = 0.1;
    std::optional<int> steps;
    std::vector<double> lambdas;
    std::optional<std::string> anchor;
    std::string out = "results";
    std::string format = "csv";
    bool plots = false;
    int workers = 1;
    double exclusion_threshold = 0.25;
};

rnet::ExperimentConfig build_config(const std::string& name, const Flags& f) {
    auto cfg = rnet::default_config(name, f.seed, f.seeds.value_or(-1));
    cfg.learning_rate = f.lr;
    cfg.workers = f.workers;
    cfg.exclusion_threshold = f.exclusion_threshold;

    if (f.nodes) {
        cfg.ensemble.nodes = *f.nodes;
        if (name == "size-budget") cfg.sizes = {*f.nodes};
    }
    if (f.edge_prob) {
        if (cfg.ensemble.kind != rnet::Ensemble::ER) throw std::invalid_argument("--edge-prob applies to ER graphs only");
        cfg.ensemble.er_p = *f.edge_prob;
    }
    if (f.steps) {
        cfg.steps = *f.steps;
        if (name == "size-budget") cfg.budgets = {*f.steps};
    }

    const auto mode = f.anchor ? rnet::parse_anchor_mode(*f.anchor) : rnet::AnchorMode::None;
    if (name == "reg-sweep") {
        if (!f.lambdas.empty()) cfg.lambda_grid = f.lambdas;
        if (mode != rnet::AnchorMode::None) cfg.anchor_modes = {mode};
    } else if (name == "baseline") {
        cfg.anchor_mode = mode;
        cfg.lambda_grid = f.lambdas;
        if (mode != rnet::AnchorMode::None && f.lambdas.size() != 1) {
            throw std::invalid_argument("baseline with an anchor needs exactly one --lambda value");
        }
    }
    cfg.validate();
    return cfg;
}

void run_one(const std::string& name, const Flags& f) {
    const auto cfg = build_config(name, f);
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = rnet::run_experiment(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    rnet::EmitOptions opts;
    opts.directory = f.out;
    opts.format = rnet::parse_output_format(f.format);
    opts.plots = f.plots;
    const auto files = rnet::emit_results(result, opts);
    std::cerr << name << ": " << result.records.size() << " runs in " << rnet::format_real(secs) << " s\n";
    for (const auto& p : files) std::cerr << "  " << p.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential training of resistor networks and catastrophic-forgetting experiments", "rnet"};
    app.set_config("--config", "", "Key-value config file (flags override it)");
    app.require_subcommand(1, 1);

    Flags f;
    app.add_option("--seed", f.seed, "Master seed")->capture_default_str();
    app.add_option("--seeds", f.seeds, "Ensemble size (realisations)")->check(CLI::PositiveNumber);
    app.add_option("--nodes", f.nodes, "Node count")->check(CLI::Range(3, 100000));
    app.add_option("--edge-prob", f.edge_prob, "ER edge probability")->check(CLI::Range(0.0, 1.0));
    app.add_option("--lr", f.lr, "Learning rate")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--steps", f.steps, "Gradient steps per stage")->check(CLI::NonNegativeNumber);
    app.add_option("--lambda", f.lambdas, "Anchor strengths")->delimiter(',')->check(CLI::NonNegativeNumber);
    app.add_option("--anchor", f.anchor, "Anchor mode")->check(CLI::IsMember({"none", "uniform", "gw"}));
    app.add_option("--out", f.out, "Output directory")->capture_default_str();
    app.add_option("--format", f.format, "Output format")
        ->capture_default_str()
        ->check(CLI::IsMember({"csv", "json", "both"}));
    app.add_flag("--plots", f.plots, "Also write SVG plots");
    app.add_option("--workers", f.workers, "Parallel runs")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--exclusion-threshold", f.exclusion_threshold, "Exclude runs with L_A(before) at or above this")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    std::vector<std::string> commands(rnet::kExperimentNames.begin(), rnet::kExperimentNames.end());
    commands.emplace_back("all");
    for (const auto& c : commands) app.add_subcommand(c, c == "all" ? "Run every experiment" : "Run " + c)->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        if (name == "all") {
            for (auto n : rnet::kExperimentNames) run_one(std::string(n), f);
        } else {
            run_one(name, f);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
