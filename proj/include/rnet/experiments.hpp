#pragma once

#include "rnet/graphs.hpp"
#include "rnet/learning.hpp"
#include "rnet/metrics.hpp"
#include "rnet/tasks.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rnet {

// =============================================================================
// Configuration
// =============================================================================

/// Experiment identifiers, in the order `all` runs them.
inline constexpr std::array<std::string_view, 9> kExperimentNames{
    "baseline", "alpha-sweep", "random-tasks", "reg-sweep", "localisation",
    "recovery", "topology",    "distance",     "size-budget"};

bool is_experiment_name(std::string_view name);

struct ExperimentConfig {
    std::string name = "baseline";
    EnsembleSpec ensemble = EnsembleSpec::erdos_renyi(40, 0.15);
    std::vector<Seed> seeds;  // realisation seeds, distinct
    double learning_rate = 0.1;
    int steps = 300;  // per training stage
    double theta_init_std = kThetaInitStd;
    double conductance_floor = kConductanceFloor;

    // Anchoring. Baseline applies anchor_mode with lambda_grid.front();
    // reg-sweep runs every mode in anchor_modes against every lambda.
    std::vector<double> lambda_grid;
    AnchorMode anchor_mode = AnchorMode::None;
    std::vector<AnchorMode> anchor_modes;

    bool apply_exclusion = false;
    double exclusion_threshold = 0.25;

    std::vector<double> alphas{1.0, 0.75, 0.5, 0.25, 0.0};
    int tasks_per_graph = 20;
    std::vector<int> distances{1, 2, 3, 4};
    std::vector<Ensemble> kinds{Ensemble::ER, Ensemble::SW, Ensemble::BA, Ensemble::RG};
    std::vector<int> sizes{40, 80, 160, 320};
    std::vector<int> budgets{300, 1000, 3000};

    int workers = 1;
    bool keep_histories = true;  // loss/output histories for the first seed of each cell

    /// Throws std::invalid_argument on empty/duplicate seeds, nonpositive
    /// learning rate or threshold, negative steps.
    void validate() const;
};

std::vector<Seed> consecutive_seeds(Seed master, int count);

/// Protocol defaults for the named experiment, seeds master .. master+count-1.
/// count < 0 selects the experiment's default ensemble size.
ExperimentConfig default_config(std::string_view name, Seed master = 0, int count = -1);

/// EnsembleSpec used by the topology sweep for one graph family at N nodes.
EnsembleSpec topology_spec(Ensemble kind, int nodes);

// =============================================================================
// Records
// =============================================================================

struct StageDigest {
    std::string name;  // e.g. "A", "B", "A2"
    double final_loss = 0.0;
    std::vector<double> loss_history;
    std::vector<std::array<double, 2>> output_history;
};

struct RunRecord {
    std::string experiment;
    std::string cell;
    int cell_index = 0;
    Seed seed = 0;
    int seed_index = 0;

    int nodes = 0;
    int edges = 0;
    Ensemble ensemble = Ensemble::ER;
    int resamples = 0;
    TerminalAssignment terminals;
    std::optional<int> d_out;

    Task second_task;
    double lambda = 0.0;
    AnchorMode anchor = AnchorMode::None;
    int steps = 0;
    double learning_rate = 0.0;

    RunSummary summary;
    bool failed = false;
    std::string failure;
    std::vector<StageDigest> stages;

    std::optional<double> extra(const std::string& key) const;
};

struct ExperimentResult {
    std::string experiment;
    ExperimentConfig config;
    std::vector<RunRecord> records;           // sorted by (cell_index, seed_index)
    std::map<std::string, double> analysis;   // experiment-level statistics
};

// =============================================================================
// Protocol building blocks
// =============================================================================

/// Graph, terminals and theta0 for one realisation seed.
struct Realisation {
    NetworkGraph graph;
    TerminalAssignment terminals;
    std::vector<double> theta0;
};

Realisation realise(const EnsembleSpec& spec, Seed seed, double theta_init_std = kThetaInitStd);

/// Per-edge current magnitude w_k |v_i - v_j| averaged over the two input patterns.
std::vector<double> mean_edge_currents(const NetworkGraph& graph, const ConductanceState& state,
                                       const TerminalAssignment& terminals);

// =============================================================================
// Experiments
// =============================================================================

ExperimentResult run_baseline(const ExperimentConfig& cfg);
ExperimentResult run_alpha_sweep(const ExperimentConfig& cfg);
ExperimentResult run_random_tasks(const ExperimentConfig& cfg);
ExperimentResult run_regularisation_sweep(const ExperimentConfig& cfg);
ExperimentResult run_localisation(const ExperimentConfig& cfg);
ExperimentResult run_recovery(const ExperimentConfig& cfg);
ExperimentResult run_topology_sweep(const ExperimentConfig& cfg);
ExperimentResult run_distance_sweep(const ExperimentConfig& cfg);
ExperimentResult run_size_budget_sweep(const ExperimentConfig& cfg);

/// Dispatches on cfg.name.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// =============================================================================
// Aggregation
// =============================================================================

/// Metrics aggregated per cell, in aggregate-CSV order.
inline constexpr std::array<std::string_view, 14> kAggregateMetrics{
    "forgetting", "lB_final", "lA_before", "lA_after", "grad_overlap_init", "top10_mass", "top20_mass",
    "pearson_IU", "spearman_IU", "lA_retrain", "E", "mean_shortest_path", "clustering", "degree_variance"};

/// Value of a named metric for one record (empty when not applicable).
std::optional<double> metric_value(const RunRecord& record, std::string_view metric);

struct AggregateRow {
    std::string experiment;
    std::string cell;
    int cell_index = 0;
    int runs = 0;
    int used = 0;
    int excluded = 0;
    int failed = 0;
    std::map<std::string, EnsembleStats, std::less<>> stats;
};

/// Mean/std per cell over records that are neither excluded nor failed.
std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records);

}  // namespace rnet
