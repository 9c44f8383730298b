// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
// Usage: rnet_acceptance [--only N]...

#include "oracles.hpp"
#include "rnet/experiments.hpp"
#include "rnet/results.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace rnet;

namespace {

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<bool()> check;
};

// Prints an individual condition and returns it.
bool expect(bool ok, const std::string& what) {
    std::cout << "    [" << (ok ? "ok" : "no") << "] " << what << "\n";
    return ok;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

const AggregateRow& row_for(const std::vector<AggregateRow>& rows, const std::string& cell) {
    for (const auto& r : rows)
        if (r.cell == cell) return r;
    throw std::runtime_error("missing cell " + cell);
}

double mean_of(const AggregateRow& row, const std::string& metric) { return row.stats.at(metric).mean; }

// ---------------------------------------------------------------------------

bool gradient_oracle() {
    double worst = 0.0;
    std::set<int> kinds;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto inst = oracle::random_instance(1000 + seed);
        kinds.insert(static_cast<int>((1000 + seed) % 4));
        const Task task = seed % 2 ? task_A() : make_task_alpha(0.3);
        const auto adj = task_loss_gradient(inst.graph, inst.state, inst.terminals, task);
        auto f = [&](const std::vector<double>& th) {
            return task_loss(inst.graph, ConductanceState{th, inst.state.floor}, inst.terminals, task);
        };
        const auto fd = oracle::fd_gradient(f, inst.state.theta);
        worst = std::max(worst, oracle::max_relative_error(adj, fd));
    }
    bool ok = expect(kinds.size() == 4, "all four ensembles covered");
    ok &= expect(worst < 1e-5, "max relative error " + fmt(worst) + " < 1e-5");
    return ok;
}

bool physics_invariants() {
    double worst_bound = 0.0, worst_current = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        auto inst = oracle::random_instance(5000 + seed, 5, 40, 1.5);
        const auto& g = inst.graph;
        const auto w = inst.state.conductances();
        const double va = std::sin(0.37 * seed), vb = std::cos(0.91 * seed);
        const auto sol = solve_equilibrium(g, w, {{inst.terminals.input_a, inst.terminals.input_b}, {va, vb}});
        std::vector<double> net(g.node_count(), 0.0);
        for (std::size_t k = 0; k < g.edges().size(); ++k) {
            const auto [u, v] = g.edges()[k];
            const double i = w[k] * (sol.at(u) - sol.at(v));
            net[u] -= i;
            net[v] += i;
        }
        const double lo = std::min(va, vb), hi = std::max(va, vb);
        for (int n = 0; n < g.node_count(); ++n) {
            worst_bound = std::max({worst_bound, lo - sol.at(n), sol.at(n) - hi});
            if (n != inst.terminals.input_a && n != inst.terminals.input_b)
                worst_current = std::max(worst_current, std::abs(net[n]));
        }
    }
    bool ok = expect(worst_bound <= 1e-12, "maximum principle violation " + fmt(std::max(0.0, worst_bound)));
    ok &= expect(worst_current < 1e-8, "max free-node net current " + fmt(worst_current) + " < 1e-8");

    const auto path = NetworkGraph::path(3);
    const BoundaryCondition bc{{0, 2}, {1.0, 0.0}};
    const std::vector<double> even{1.0, 1.0}, skew{2.0, 1.0};
    const double v_even = solve_equilibrium(path, even, bc).at(1);
    const double v_skew = solve_equilibrium(path, skew, bc).at(1);
    ok &= expect(std::abs(v_even - 0.5) <= 1e-12, "divider w=(1,1): v1 = " + fmt(v_even));
    ok &= expect(std::abs(v_skew - 2.0 / 3.0) <= 1e-12, "divider w=(2,1): v1 = " + fmt(v_skew));
    return ok;
}

bool baseline() {
    const auto res = run_experiment(default_config("baseline", 0));
    const auto rows = aggregate(res.records);
    const auto& r = row_for(rows, "baseline");
    const double f = mean_of(r, "forgetting"), lb = mean_of(r, "lB_final");
    bool ok = expect(r.used == 20, "20 runs used");
    ok &= expect(f >= 0.079 && f <= 0.435, "mean forgetting " + fmt(f) + " in [0.079, 0.435]");
    ok &= expect(lb >= 0.0 && lb <= 0.392, "mean Task B loss " + fmt(lb) + " in [0, 0.392]");
    return ok;
}

bool regularisation() {
    const auto rows = aggregate(run_experiment(default_config("reg-sweep", 0)).records);
    bool ok = true;
    for (const std::string mode : {"uniform", "gw"}) {
        std::vector<double> f, lb;
        for (const std::string lam : {"0.1", "1", "5", "10"}) {
            const auto& r = row_for(rows, mode + ":lambda=" + lam);
            f.push_back(mean_of(r, "forgetting"));
            lb.push_back(mean_of(r, "lB_final"));
        }
        bool mono = true;
        for (std::size_t i = 1; i < f.size(); ++i) mono &= f[i] < f[i - 1] && lb[i] > lb[i - 1];
        std::string trace;
        for (std::size_t i = 0; i < f.size(); ++i) trace += " (" + fmt(f[i]) + ", " + fmt(lb[i]) + ")";
        ok &= expect(mono, mode + " F strictly down, L_B strictly up:" + trace);
    }
    const double gw1 = mean_of(row_for(rows, "gw:lambda=1"), "forgetting");
    const double u10 = mean_of(row_for(rows, "uniform:lambda=10"), "forgetting");
    ok &= expect(gw1 >= 0.012 && gw1 <= 0.060, "gw lambda=1 mean F " + fmt(gw1) + " in [0.012, 0.060]");
    ok &= expect(u10 >= 0.012 && u10 <= 0.060, "uniform lambda=10 mean F " + fmt(u10) + " in [0.012, 0.060]");
    return ok;
}

bool alpha_sweep() {
    const auto res = run_experiment(default_config("alpha-sweep", 0));
    double min_omega = 1.0, max_f1 = -1.0;
    int checkpoints = 0;
    for (const auto& r : res.records) {
        if (r.failed || !r.second_task.alpha || *r.second_task.alpha != 1.0) continue;
        max_f1 = std::max(max_f1, r.summary.forgetting);
        for (const auto& [key, value] : r.summary.extras) {
            if (key.rfind("omega_t", 0) != 0) continue;
            min_omega = std::min(min_omega, value);
            ++checkpoints;
        }
    }
    const auto rows = aggregate(res.records);
    const double f0 = mean_of(row_for(rows, "alpha=0"), "forgetting");
    const double fh = mean_of(row_for(rows, "alpha=0.5"), "forgetting");
    const double frac = res.analysis.at("frac_seeds_F0_gt_Fhalf");
    bool ok = expect(checkpoints > 0 && min_omega >= 0.99,
                     "alpha=1 min Omega " + fmt(min_omega) + " over " + std::to_string(checkpoints) + " checkpoints");
    ok &= expect(max_f1 <= 0.01, "alpha=1 max forgetting " + fmt(max_f1) + " <= 0.01");
    ok &= expect(f0 >= 2.0 * fh, "mean F(0) " + fmt(f0) + " >= 2 x mean F(0.5) " + fmt(fh));
    ok &= expect(frac >= 0.9, "seeds with F(0) > F(0.5): " + fmt(frac));
    return ok;
}

bool random_tasks() {
    const auto res = run_experiment(default_config("random-tasks", 0));
    const double c = res.analysis.at("pearson_F_contrast");
    const double m = res.analysis.at("pearson_F_target_mse");
    const double o = res.analysis.at("pearson_F_overlap");
    bool ok = expect(res.analysis.at("runs") == 250.0, "10 graphs x 25 tasks, runs " + fmt(res.analysis.at("runs")));
    ok &= expect(c <= -0.85, "corr(F, contrast) " + fmt(c) + " <= -0.85");
    ok &= expect(m >= 0.85, "corr(F, target mse) " + fmt(m) + " >= 0.85");
    ok &= expect(std::abs(o) < std::abs(c), "|corr(F, overlap)| " + fmt(std::abs(o)) + " < |corr(F, contrast)|");
    return ok;
}

bool localisation() {
    const auto rows = aggregate(run_experiment(default_config("localisation", 0)).records);
    const auto& r = row_for(rows, "localisation");
    auto band = [&](const std::string& metric, double lo, double hi) {
        const double v = mean_of(r, metric);
        return expect(v >= lo && v <= hi, metric + " " + fmt(v) + " in [" + fmt(lo) + ", " + fmt(hi) + "]");
    };
    bool ok = expect(r.used == 10, "10 graphs used");
    ok &= band("top10_mass", 0.594, 0.950);
    ok &= band("top20_mass", 0.858, 0.954);
    ok &= band("pearson_IU", 0.705, 1.0);
    ok &= band("spearman_IU", 0.662, 0.890);
    return ok;
}

bool recovery() {
    const auto res = run_experiment(default_config("recovery", 0));
    int good = 0, total = 0;
    const RunRecord* rep = nullptr;
    for (const auto& r : res.records) {
        if (r.seed_index == 0) rep = &r;
        ++total;
        if (r.failed) continue;
        const double a = r.summary.taskA_before, b = r.summary.taskA_after, c = *r.extra("lA_retrain");
        if (b >= a + 0.1 && c <= b - 0.1) ++good;
    }
    bool ok = expect(total == 20 && good >= 16, "recovery pattern on " + std::to_string(good) + "/20 seeds");
    ok &= expect(rep && !rep->failed, "representative run present");
    if (!ok) return false;
    const double a = rep->summary.taskA_before, b = rep->summary.taskA_after, c = *rep->extra("lA_retrain");
    ok &= expect(std::abs(a - 0.092) <= 0.15 && std::abs(b - 0.343) <= 0.15 && std::abs(c - 0.119) <= 0.15,
                 "representative (" + fmt(a) + ", " + fmt(b) + ", " + fmt(c) + ") vs (0.092, 0.343, 0.119) +- 0.15");
    return ok;
}

bool topology() {
    const auto res = run_experiment(default_config("topology", 0));
    const auto rows = aggregate(res.records);
    const auto& er = row_for(rows, std::string(to_string(Ensemble::ER)));
    const auto& sw = row_for(rows, std::string(to_string(Ensemble::SW)));
    const auto& ba = row_for(rows, std::string(to_string(Ensemble::BA)));
    const auto& rg = row_for(rows, std::string(to_string(Ensemble::RG)));
    bool ba_edges = true;
    for (const auto& r : res.records)
        if (r.ensemble == Ensemble::BA) ba_edges &= r.edges == 231;
    const double f_sw = mean_of(sw, "forgetting"), f_ba = mean_of(ba, "forgetting");
    const double l_sw = mean_of(sw, "lB_final"), l_ba = mean_of(ba, "lB_final");
    const double f_er = mean_of(er, "forgetting");
    bool ok = expect(f_sw > f_ba, "SW F " + fmt(f_sw) + " > BA F " + fmt(f_ba));
    ok &= expect(l_sw < l_ba, "SW L_B " + fmt(l_sw) + " < BA L_B " + fmt(l_ba));
    ok &= expect(f_er >= 0.201 && f_er <= 0.581, "ER F " + fmt(f_er) + " in [0.201, 0.581]");
    ok &= expect(ba_edges, "every BA graph has 231 edges");
    ok &= expect(rg.used >= 13 && rg.used <= 20, "RG retains " + std::to_string(rg.used) + " of 20");
    return ok;
}

bool size_budget() {
    const auto rows = aggregate(run_experiment(default_config("size-budget", 0)).records);
    const std::vector<int> sizes{40, 80, 160, 320};
    const std::vector<int> budgets{300, 1000, 3000};
    auto cell = [&](int n, int t) -> const AggregateRow& {
        return row_for(rows, "N=" + std::to_string(n) + "/T=" + std::to_string(t));
    };
    bool ok = true;
    double min_rise = 1e9;
    for (int n : sizes) {
        const double f300 = mean_of(cell(n, 300), "forgetting");
        const double f1000 = mean_of(cell(n, 1000), "forgetting");
        const double f3000 = mean_of(cell(n, 3000), "forgetting");
        const double lb = mean_of(cell(n, 3000), "lB_final");
        ok &= expect(f3000 - f300 >= 0.4, "N=" + std::to_string(n) + " F(3000) - F(300) = " + fmt(f3000 - f300));
        ok &= expect(lb < 0.03, "N=" + std::to_string(n) + " L_B(3000) = " + fmt(lb) + " < 0.03");
        min_rise = std::min(min_rise, f1000 - f300);
    }
    for (int t : budgets) {
        double lo = 1e9, hi = -1e9;
        for (int n : sizes) {
            const double f = mean_of(cell(n, t), "forgetting");
            lo = std::min(lo, f);
            hi = std::max(hi, f);
        }
        ok &= expect(hi - lo < min_rise, "T=" + std::to_string(t) + " spread across N " + fmt(hi - lo) +
                                             " < smallest 300->1000 rise " + fmt(min_rise));
    }
    return ok;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool determinism_io() {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / ("rnet_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    bool ok = true;
    for (const auto name : kExperimentNames) {
        std::string runs[2];
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path out = root / (std::string(name) + "_" + std::to_string(rep));
            const std::string cmd = std::string(RNET_CLI) + " " + std::string(name) +
                                    " --seeds 2 --steps 15 --workers " + std::to_string(1 + 2 * rep) +
                                    " --out " + out.string() + " 2>/dev/null";
            if (std::system(cmd.c_str()) != 0) return expect(false, std::string(name) + ": CLI failed");
            runs[rep] = slurp(out / (std::string(name) + "_runs.csv"));
        }
        ok &= expect(!runs[0].empty() && runs[0] == runs[1], std::string(name) + ": row CSV byte-identical");

        const auto table = parse_csv(runs[0]);
        const auto agg = parse_csv(slurp(root / (std::string(name) + "_0") / (std::string(name) + "_aggregate.csv")));
        const int cell_col = table.column("cell");
        const int excl_col = table.column("excluded");
        const int fail_col = table.column("failed");
        double worst = 0.0;
        int compared = 0;
        for (const auto& arow : agg.rows) {
            const std::string cell = arow[agg.column("cell")];
            for (const std::string metric : {"forgetting", "lB_final", "lA_before", "lA_after"}) {
                const std::string& want = arow[agg.column(metric + "_mean")];
                if (want.empty()) continue;
                std::vector<double> values;
                for (const auto& r : table.rows) {
                    if (r[cell_col] != cell || r[excl_col] == "1" || r[fail_col] == "1") continue;
                    if (!r[table.column(metric)].empty()) values.push_back(std::stod(r[table.column(metric)]));
                }
                if (values.empty()) continue;
                worst = std::max(worst, std::abs(ensemble_stats(values).mean - std::stod(want)));
                ++compared;
            }
        }
        ok &= expect(compared > 0 && worst <= 1e-9,
                     std::string(name) + ": aggregate means match rows, max diff " + fmt(worst));
    }
    fs::remove_all(root);
    return ok;
}

bool anchoring_limit() {
    const auto cfg = default_config("baseline", 0);
    double worst_f = -1.0, worst_dev = 0.0;
    for (const Seed seed : cfg.seeds) {
        const auto real = realise(cfg.ensemble, seed, cfg.theta_init_std);
        const TrainConfig tc{cfg.learning_rate, cfg.steps, 0};
        const auto rec_a = train(real.graph, {real.theta0, cfg.conductance_floor}, real.terminals, task_A(), tc);
        const ConductanceState at_a{rec_a.final_theta, cfg.conductance_floor};
        const auto anchor = AnchorSpec::uniform(1e6, rec_a.final_theta);
        const auto rec_b = train(real.graph, at_a, real.terminals, make_task_alpha(0.0), tc, anchor);
        const ConductanceState at_b{rec_b.final_theta, cfg.conductance_floor};
        const double f = forgetting(task_loss(real.graph, at_a, real.terminals, task_A()),
                                    task_loss(real.graph, at_b, real.terminals, task_A()));
        worst_f = std::max(worst_f, f);
        for (std::size_t k = 0; k < rec_a.final_theta.size(); ++k)
            worst_dev = std::max(worst_dev, std::abs(rec_b.final_theta[k] - rec_a.final_theta[k]));
    }
    bool ok = expect(worst_f < 0.01, "max per-seed forgetting " + fmt(worst_f) + " < 0.01");
    ok &= expect(worst_dev <= 1e-2, "max |theta - theta_A| " + fmt(worst_dev) + " <= 1e-2");
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--only" && i + 1 < argc) {
            only.insert(std::stoi(argv[++i]));
        } else {
            std::cerr << "usage: " << argv[0] << " [--only N]...\n";
            return 2;
        }
    }

    const std::vector<Criterion> criteria{
        {1, "gradient oracle", 30, gradient_oracle},
        {2, "physics invariants", 1e9, physics_invariants},
        {3, "baseline ensemble", 300, baseline},
        {4, "regularisation trade-off", 1800, regularisation},
        {5, "alpha sweep", 1e9, alpha_sweep},
        {6, "random-task ensemble", 1200, random_tasks},
        {7, "localisation", 1e9, localisation},
        {8, "recovery", 1e9, recovery},
        {9, "topology", 2700, topology},
        {10, "size-budget", 10800, size_budget},
        {11, "determinism and I/O", 1e9, determinism_io},
        {12, "anchoring limit", 1e9, anchoring_limit},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        std::cout << "criterion " << c.id << " (" << c.name << ")\n";
        const auto start = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = c.check();
        } catch (const std::exception& e) {
            std::cout << "    error: " << e.what() << "\n";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_seconds < 1e9) {
            ok &= expect(secs < c.budget_seconds, "runtime " + fmt(secs) + " s < " + fmt(c.budget_seconds) + " s");
        }
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.name << " (" << fmt(secs)
                  << " s)\n"
                  << std::flush;
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
