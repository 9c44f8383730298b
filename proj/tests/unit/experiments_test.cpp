#include "rnet/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

using namespace rnet;

namespace {

ExperimentConfig small(std::string_view name, int seeds = 3, int steps = 40) {
    auto cfg = default_config(name, 100, seeds);
    cfg.steps = steps;
    return cfg;
}

double loss_from_outputs(const Task& t, const std::array<double, 2>& out) {
    return 0.5 * ((out[0] - t.targets[0]) * (out[0] - t.targets[0]) + (out[1] - t.targets[1]) * (out[1] - t.targets[1]));
}

bool same_numbers(const RunRecord& a, const RunRecord& b) {
    return a.seed == b.seed && a.cell == b.cell && a.summary.forgetting == b.summary.forgetting &&
           a.summary.taskA_before == b.summary.taskA_before && a.summary.taskB_final == b.summary.taskB_final &&
           a.summary.extras == b.summary.extras && a.terminals == b.terminals && a.edges == b.edges;
}

}  // namespace

TEST(Config, Defaults) {
    const auto reg = default_config("reg-sweep");
    EXPECT_EQ(reg.seeds.size(), 20u);
    EXPECT_EQ(reg.lambda_grid, (std::vector<double>{0.1, 1.0, 5.0, 10.0}));
    EXPECT_EQ(reg.anchor_modes.size(), 2u);
    EXPECT_EQ(default_config("localisation").seeds.size(), 10u);
    const auto topo = default_config("topology");
    EXPECT_EQ(topo.steps, 500);
    EXPECT_EQ(topo.ensemble.nodes, 80);
    EXPECT_TRUE(topo.apply_exclusion);
    EXPECT_FALSE(default_config("baseline").apply_exclusion);
    EXPECT_EQ(default_config("baseline", 7, 2).seeds, (std::vector<Seed>{7, 8}));
    EXPECT_THROW(default_config("nonsense"), std::invalid_argument);
    for (auto n : kExperimentNames) EXPECT_TRUE(is_experiment_name(n));
}

TEST(Config, Validation) {
    auto cfg = default_config("baseline", 0, 2);
    cfg.seeds = {1, 1};
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg.seeds = {};
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = default_config("baseline", 0, 2);
    cfg.exclusion_threshold = 0.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = default_config("baseline", 0, 2);
    cfg.learning_rate = -0.1;
    EXPECT_THROW(run_experiment(cfg), std::invalid_argument);
    cfg = default_config("alpha-sweep", 0, 2);
    cfg.alphas = {1.2};
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(TopologySpec, FamilyParameters) {
    EXPECT_DOUBLE_EQ(topology_spec(Ensemble::ER, 80).er_p, 0.08);
    EXPECT_EQ(topology_spec(Ensemble::SW, 80).sw_k, 6);
    EXPECT_DOUBLE_EQ(topology_spec(Ensemble::SW, 80).sw_beta, 0.2);
    EXPECT_EQ(topology_spec(Ensemble::BA, 80).ba_m, 3);
    EXPECT_DOUBLE_EQ(topology_spec(Ensemble::RG, 80).rg_r, 0.17);
}

TEST(Realise, Deterministic) {
    const auto spec = EnsembleSpec::erdos_renyi(40, 0.15);
    const auto a = realise(spec, 5), b = realise(spec, 5);
    EXPECT_EQ(a.graph.edges(), b.graph.edges());
    EXPECT_EQ(a.terminals, b.terminals);
    EXPECT_EQ(a.theta0, b.theta0);
    EXPECT_EQ(a.theta0.size(), static_cast<std::size_t>(a.graph.edge_count()));
}

TEST(Realise, MeanCurrentsAverageBothPatterns) {
    const auto r = realise(EnsembleSpec::erdos_renyi(30, 0.2), 1);
    const ConductanceState state{r.theta0, kConductanceFloor};
    const auto w = state.conductances();
    const auto avg = mean_edge_currents(r.graph, state, r.terminals);
    std::vector<double> expect(w.size(), 0.0);
    for (const auto& p : kInputPatterns) {
        const auto sol = solve_equilibrium(r.graph, w, {{r.terminals.input_a, r.terminals.input_b}, {p[0], p[1]}});
        const auto cur = edge_currents(r.graph, w, sol.voltages);
        for (std::size_t k = 0; k < w.size(); ++k) expect[k] += 0.5 * cur[k];
    }
    for (std::size_t k = 0; k < w.size(); ++k) EXPECT_NEAR(avg[k], expect[k], 1e-14);
}

TEST(Baseline, ReproducibleAndOrderIndependent) {
    auto cfg = small("baseline", 4);
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    cfg.workers = 3;
    const auto c = run_experiment(cfg);
    ASSERT_EQ(a.records.size(), 4u);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_TRUE(same_numbers(a.records[i], b.records[i]));
        EXPECT_TRUE(same_numbers(a.records[i], c.records[i]));
        EXPECT_EQ(a.records[i].seed_index, static_cast<int>(i));
    }
}

TEST(Baseline, RecordContents) {
    const auto res = run_experiment(small("baseline", 2));
    for (const auto& r : res.records) {
        EXPECT_FALSE(r.failed);
        EXPECT_EQ(r.second_task.targets, make_task_alpha(0.0).targets);
        EXPECT_EQ(r.summary.forgetting, r.summary.taskA_after - r.summary.taskA_before);
        ASSERT_EQ(r.stages.size(), 2u);
        EXPECT_EQ(r.stages[0].final_loss, r.summary.taskA_before);
        EXPECT_EQ(r.stages[1].final_loss, r.summary.taskB_final);
        EXPECT_EQ(r.summary.graph_stats.edge_count, r.edges);
        EXPECT_TRUE(r.extra("top10_mass").has_value());
        EXPECT_TRUE(r.extra("pearson_IU").has_value());
    }
    // Histories are kept for the first seed only.
    EXPECT_EQ(res.records[0].stages[0].loss_history.size(), 40u);
    EXPECT_TRUE(res.records[1].stages[0].loss_history.empty());
}

TEST(Baseline, StageChaining) {
    const auto res = run_experiment(small("recovery", 2));
    const auto& r = res.records[0];
    ASSERT_EQ(r.stages.size(), 3u);
    EXPECT_EQ(r.stages[2].name, "A2");
    // Stage n+1 starts where stage n ended: its first pre-update outputs reproduce stage n's final loss.
    EXPECT_DOUBLE_EQ(loss_from_outputs(task_A(), r.stages[1].output_history.front()), r.stages[0].final_loss);
    EXPECT_DOUBLE_EQ(loss_from_outputs(r.second_task, r.stages[2].output_history.front()), r.stages[1].final_loss);
    EXPECT_DOUBLE_EQ(loss_from_outputs(task_A(), r.stages[2].output_history.front()), r.summary.taskA_after);
    EXPECT_EQ(r.extra("lA_retrain"), std::optional<double>(r.stages[2].final_loss));
}

TEST(Recovery, ZeroStepsLeavesLossUnchanged) {
    const auto res = run_experiment(small("recovery", 2, 0));
    for (const auto& r : res.records) {
        const auto real = realise(EnsembleSpec::erdos_renyi(40, 0.15), r.seed);
        const double untrained = task_loss(real.graph, {real.theta0, kConductanceFloor}, real.terminals, task_A());
        EXPECT_DOUBLE_EQ(r.summary.taskA_before, untrained);
        EXPECT_DOUBLE_EQ(r.summary.taskA_after, untrained);
        EXPECT_DOUBLE_EQ(*r.extra("lA_retrain"), untrained);
    }
}

TEST(Baseline, StrongAnchorLimit) {
    auto cfg = small("baseline", 3, 100);
    cfg.anchor_mode = AnchorMode::Uniform;
    cfg.lambda_grid = {1e6};
    const auto res = run_experiment(cfg);
    for (const auto& r : res.records) {
        EXPECT_EQ(r.cell, "uniform:lambda=1e+06");
        EXPECT_LT(r.summary.forgetting, 0.01);
        EXPECT_EQ(r.lambda, 1e6);
    }
}

TEST(Aggregate, FailedAndExcludedRunsKeptOut) {
    auto res = run_experiment(small("baseline", 4, 10));
    res.records[0].failed = true;
    res.records[0].failure = "non-finite parameters at step 3";
    res.records[1].summary.excluded = true;
    const auto rows = aggregate(res.records);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].runs, 4);
    EXPECT_EQ(rows[0].failed, 1);
    EXPECT_EQ(rows[0].excluded, 1);
    EXPECT_EQ(rows[0].used, 2);
    const std::vector<double> kept{res.records[2].summary.forgetting, res.records[3].summary.forgetting};
    EXPECT_DOUBLE_EQ(rows[0].stats.at("forgetting").mean, ensemble_stats(kept).mean);
}

TEST(AlphaSweep, AlignedAndOpposedOverlaps) {
    const auto res = run_experiment(small("alpha-sweep", 3, 40));
    EXPECT_EQ(res.records.size(), 15u);
    for (const auto& r : res.records) {
        const double alpha = *r.second_task.alpha;
        int checkpoints = 0;
        for (const auto& [key, v] : r.summary.extras) {
            if (key.rfind("omega_t", 0) != 0) continue;
            ++checkpoints;
            if (alpha == 1.0) EXPECT_NEAR(v, 1.0, 1e-6);
            if (alpha == 0.0 && key == "omega_t40") EXPECT_NEAR(v, -1.0, 1e-6);
        }
        EXPECT_EQ(checkpoints, 5);
        if (alpha == 1.0) EXPECT_LE(r.summary.forgetting, 1e-12);
    }
    EXPECT_TRUE(res.analysis.count("frac_seeds_F0_gt_Fhalf"));
}

TEST(RandomTasks, SharedTaskAPerGraph) {
    auto cfg = small("random-tasks", 2, 30);
    cfg.tasks_per_graph = 4;
    const auto res = run_experiment(cfg);
    EXPECT_EQ(res.records.size(), 2u * (4 + 5));
    std::map<Seed, std::set<double>> before;
    for (const auto& r : res.records) before[r.seed].insert(r.summary.taskA_before);
    for (const auto& [s, set] : before) EXPECT_EQ(set.size(), 1u);
    EXPECT_EQ(res.analysis.at("runs"), 18.0);
    EXPECT_TRUE(res.analysis.count("pearson_F_contrast"));
}

TEST(RegSweep, NineCells) {
    const auto res = run_experiment(small("reg-sweep", 2, 30));
    const auto rows = aggregate(res.records);
    ASSERT_EQ(rows.size(), 9u);
    EXPECT_EQ(rows[0].cell, "baseline");
    std::set<std::string> cells;
    for (const auto& r : rows) cells.insert(r.cell);
    EXPECT_TRUE(cells.count("gw:lambda=1"));
    EXPECT_TRUE(cells.count("uniform:lambda=10"));
}

TEST(Topology, ExclusionKeepsBadRunsOutOfAggregates) {
    auto cfg = small("topology", 4, 20);
    cfg.exclusion_threshold = 0.12;
    const auto res = run_experiment(cfg);
    for (const auto& row : aggregate(res.records)) {
        std::vector<double> kept;
        int excluded = 0;
        for (const auto& r : res.records) {
            if (r.cell_index != row.cell_index) continue;
            if (r.summary.taskA_before >= 0.12) {
                EXPECT_TRUE(r.summary.excluded);
                ++excluded;
            } else {
                kept.push_back(r.summary.forgetting);
            }
        }
        EXPECT_EQ(row.excluded, excluded);
        EXPECT_EQ(row.used, static_cast<int>(kept.size()));
        if (!kept.empty()) EXPECT_NEAR(row.stats.at("forgetting").mean, ensemble_stats(kept).mean, 1e-15);
    }
}

TEST(Topology, BarabasiAlbertEdges) {
    const auto res = run_experiment(small("topology", 2, 1));
    for (const auto& r : res.records)
        if (r.ensemble == Ensemble::BA) EXPECT_EQ(r.edges, 231);
}

TEST(Distance, OutputsAtRequestedDistance) {
    auto cfg = small("distance", 3, 5);
    cfg.distances = {1, 2, 50};
    const auto res = run_experiment(cfg);
    for (const auto& r : res.records) {
        ASSERT_TRUE(r.d_out.has_value());
        EXPECT_NE(*r.d_out, 50);
        const auto real = realise(cfg.ensemble, r.seed);
        const auto da = bfs_distances(real.graph, r.terminals.input_a);
        const auto db = bfs_distances(real.graph, r.terminals.input_b);
        EXPECT_EQ(std::min(da[r.terminals.output], db[r.terminals.output]), *r.d_out);
    }
    for (const auto& row : aggregate(res.records)) EXPECT_NE(row.cell, "d=50");
}

TEST(SizeBudget, CellGrid) {
    auto cfg = small("size-budget", 2);
    cfg.sizes = {20, 30};
    cfg.budgets = {5, 10};
    const auto res = run_experiment(cfg);
    EXPECT_EQ(res.records.size(), 8u);
    const auto rows = aggregate(res.records);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0].cell, "N=20/T=5");
    EXPECT_EQ(rows[3].cell, "N=30/T=10");
    for (const auto& r : res.records) EXPECT_EQ(r.steps, r.cell.back() == '5' ? 5 : 10);
}

TEST(Aggregate, SingleRunHasNoStd) {
    const auto res = run_experiment(small("baseline", 1, 5));
    const auto rows = aggregate(res.records);
    EXPECT_EQ(rows[0].stats.at("forgetting").mean, res.records[0].summary.forgetting);
    EXPECT_FALSE(rows[0].stats.at("forgetting").std_dev.has_value());
}
