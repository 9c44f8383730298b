#include "rnet/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace rnet {

bool is_experiment_name(std::string_view name) {
    return std::find(kExperimentNames.begin(), kExperimentNames.end(), name) != kExperimentNames.end();
}

void ExperimentConfig::validate() const {
    if (!is_experiment_name(name)) throw std::invalid_argument("unknown experiment '" + name + "'");
    if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
    if (std::set<Seed>(seeds.begin(), seeds.end()).size() != seeds.size()) {
        throw std::invalid_argument("seeds must be distinct");
    }
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (steps < 0) throw std::invalid_argument("steps must be >= 0");
    if (!(exclusion_threshold > 0.0)) throw std::invalid_argument("exclusion threshold must be positive");
    if (!(theta_init_std >= 0.0)) throw std::invalid_argument("theta init std must be >= 0");
    for (double l : lambda_grid)
        if (!(l >= 0.0)) throw std::invalid_argument("lambda values must be >= 0");
    for (double a : alphas)
        if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("alpha values must be in [0,1]");
    for (int d : distances)
        if (d < 1) throw std::invalid_argument("distances must be >= 1");
    for (int t : budgets)
        if (t < 0) throw std::invalid_argument("budgets must be >= 0");
    for (int n : sizes)
        if (n < 3) throw std::invalid_argument("sizes must be >= 3");
    if (tasks_per_graph < 0) throw std::invalid_argument("tasks per graph must be >= 0");
    ensemble.validate();
}

std::vector<Seed> consecutive_seeds(Seed master, int count) {
    std::vector<Seed> seeds;
    for (int i = 0; i < count; ++i) seeds.push_back(master + static_cast<Seed>(i));
    return seeds;
}

EnsembleSpec topology_spec(Ensemble kind, int nodes) {
    switch (kind) {
        case Ensemble::ER: return EnsembleSpec::erdos_renyi(nodes, 0.08);
        case Ensemble::SW: return EnsembleSpec::watts_strogatz(nodes, 6, 0.2);
        case Ensemble::BA: return EnsembleSpec::barabasi_albert(nodes, 3);
        case Ensemble::RG: return EnsembleSpec::random_geometric(nodes, 0.17);
    }
    throw std::invalid_argument("unknown ensemble");
}

ExperimentConfig default_config(std::string_view name, Seed master, int count) {
    if (!is_experiment_name(name)) throw std::invalid_argument("unknown experiment '" + std::string(name) + "'");
    ExperimentConfig cfg;
    cfg.name = std::string(name);
    int default_count = 20;
    if (name == "random-tasks" || name == "localisation") default_count = 10;
    if (name == "reg-sweep") {
        cfg.lambda_grid = {0.1, 1.0, 5.0, 10.0};
        cfg.anchor_modes = {AnchorMode::Uniform, AnchorMode::GradientWeighted};
    }
    if (name == "topology") {
        cfg.ensemble = topology_spec(Ensemble::ER, 80);
        cfg.steps = 500;
        cfg.apply_exclusion = true;
    }
    if (name == "distance") {
        cfg.ensemble = EnsembleSpec::erdos_renyi(80, 0.08);
        cfg.steps = 500;
        cfg.apply_exclusion = true;
    }
    if (name == "size-budget") cfg.apply_exclusion = true;
    cfg.seeds = consecutive_seeds(master, count < 0 ? default_count : count);
    return cfg;
}

std::optional<double> RunRecord::extra(const std::string& key) const {
    const auto it = summary.extras.find(key);
    if (it == summary.extras.end()) return std::nullopt;
    return it->second;
}

// =============================================================================
// Protocol building blocks
// =============================================================================

Realisation realise(const EnsembleSpec& spec, Seed seed, double theta_init_std) {
    NetworkGraph graph = generate_graph(spec, derive_seed(seed, Stream::Graph));
    const auto terminals = select_terminals(graph, derive_seed(seed, Stream::Terminals, 0));
    auto theta0 = initial_theta(graph.edge_count(), derive_seed(seed, Stream::Terminals, 1), theta_init_std);
    return Realisation{std::move(graph), terminals, std::move(theta0)};
}

std::vector<double> mean_edge_currents(const NetworkGraph& graph, const ConductanceState& state,
                                       const TerminalAssignment& terminals) {
    const auto w = state.conductances();
    const std::array<NodeId, 2> inputs{terminals.input_a, terminals.input_b};
    const ReducedLaplacian system(graph, w, inputs);
    std::vector<double> mean(w.size(), 0.0);
    for (const auto& pattern : kInputPatterns) {
        const auto v = system.solve(pattern).voltages;
        const auto current = edge_currents(graph, w, v);
        for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += current[k] / static_cast<double>(kInputPatterns.size());
    }
    return mean;
}

namespace {

template <class Job>
std::vector<std::vector<RunRecord>> run_jobs(std::size_t count, int workers, Job&& job) {
    std::vector<std::vector<RunRecord>> out(count);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                out[i] = job(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::clamp<long>(workers, 1, static_cast<long>(std::max<std::size_t>(count, 1))));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    return out;
}

ExperimentResult collect(const ExperimentConfig& cfg, std::vector<std::vector<RunRecord>> parts) {
    ExperimentResult result;
    result.experiment = cfg.name;
    result.config = cfg;
    for (auto& p : parts)
        for (auto& r : p) result.records.push_back(std::move(r));
    std::stable_sort(result.records.begin(), result.records.end(), [](const RunRecord& a, const RunRecord& b) {
        return std::tie(a.cell_index, a.seed_index) < std::tie(b.cell_index, b.seed_index);
    });
    return result;
}

std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

std::string alpha_cell(double alpha) { return "alpha=" + format_number(alpha); }

/// Fills identity fields shared by every record of a realisation.
RunRecord base_record(const ExperimentConfig& cfg, std::string cell, int cell_index, std::size_t seed_index,
                      const EnsembleSpec& spec, int steps) {
    RunRecord r;
    r.experiment = cfg.name;
    r.cell = std::move(cell);
    r.cell_index = cell_index;
    r.seed = cfg.seeds.at(seed_index);
    r.seed_index = static_cast<int>(seed_index);
    r.nodes = spec.nodes;
    r.ensemble = spec.kind;
    r.steps = steps;
    r.learning_rate = cfg.learning_rate;
    r.second_task = make_task_alpha(0.0);
    return r;
}

void attach_realisation(RunRecord& r, const Realisation& real, const GraphStats& stats) {
    r.edges = real.graph.edge_count();
    r.resamples = real.graph.resample_count();
    r.terminals = real.terminals;
    r.summary.graph_stats = stats;
}

RunRecord failed_record(RunRecord r, const std::string& why) {
    r.failed = true;
    r.failure = why;
    return r;
}

StageDigest digest(std::string name, const TrainRecord& rec, double final_loss, bool keep) {
    StageDigest d;
    d.name = std::move(name);
    d.final_loss = final_loss;
    if (keep) {
        d.loss_history = rec.loss_history;
        d.output_history = rec.output_history;
    }
    return d;
}

/// Trained first stage shared by every second task of a realisation.
struct FirstStage {
    TrainRecord record;
    NetworkResponse response;      // at theta_A, with gradients
    std::vector<double> currents;  // mean edge currents at theta_A
};

FirstStage train_first_stage(const ExperimentConfig& cfg, const Realisation& real, const Task& task, int steps,
                             int checkpoint_stride = 0) {
    const ConductanceState init{real.theta0, cfg.conductance_floor};
    const TrainConfig tc{cfg.learning_rate, steps, checkpoint_stride};
    FirstStage first;
    first.record = train(real.graph, init, real.terminals, task, tc);
    const ConductanceState at_a{first.record.final_theta, cfg.conductance_floor};
    first.response = network_response(real.graph, at_a, real.terminals, true);
    first.currents = mean_edge_currents(real.graph, at_a, real.terminals);
    return first;
}

/// Second training stage from theta_A plus the forgetting/localisation metrics.
/// Returns the stage record so callers can chain further stages.
TrainRecord run_second_stage(RunRecord& r, const ExperimentConfig& cfg, const Realisation& real, const FirstStage& first,
                      const Task& second, const AnchorSpec& anchor, int steps, bool keep) {
    const Task first_task = task_A();
    const ConductanceState at_a{first.record.final_theta, cfg.conductance_floor};
    const TrainConfig tc{cfg.learning_rate, steps, 0};
    const auto rec_b = train(real.graph, at_a, real.terminals, second, tc, anchor);
    const ConductanceState at_b{rec_b.final_theta, cfg.conductance_floor};
    const auto resp_b = network_response(real.graph, at_b, real.terminals, false);

    const std::optional<double> threshold =
        cfg.apply_exclusion ? std::optional<double>(cfg.exclusion_threshold) : std::nullopt;
    const auto stats = r.summary.graph_stats;
    r.summary = RunSummary::from_losses(first.response.loss(first_task), resp_b.loss(first_task),
                                        resp_b.loss(second), threshold);
    r.summary.graph_stats = stats;
    r.second_task = second;
    r.lambda = anchor.lambda;
    r.anchor = anchor.mode;

    auto& ex = r.summary.extras;
    ex["contrast"] = target_contrast(second);
    ex["target_mse"] = target_mse(first_task, second);
    const auto g_a = first.response.loss_gradient(first_task);
    const auto g_b = first.response.loss_gradient(second);
    ex["grad_overlap_init"] = gradient_cosine(g_a, g_b);

    std::vector<double> delta(at_a.theta.size());
    for (std::size_t k = 0; k < delta.size(); ++k) delta[k] = rec_b.final_theta[k] - at_a.theta[k];
    const auto c10 = update_concentration(delta, 0.10);
    const auto c20 = update_concentration(delta, 0.20);
    ex["top10_mass"] = c10.value;
    ex["top20_mass"] = c20.value;
    if (c10.degenerate) ex["update_degenerate"] = 1.0;
    std::vector<double> magnitude(delta.size());
    std::transform(delta.begin(), delta.end(), magnitude.begin(), [](double d) { return std::abs(d); });
    try {
        ex["pearson_IU"] = pearson(first.currents, magnitude);
        ex["spearman_IU"] = spearman(first.currents, magnitude);
    } catch (const UndefinedStatistic&) {
        // constant currents or updates, e.g. steps == 0
    }

    r.stages.clear();
    r.stages.push_back(digest("A", first.record, r.summary.taskA_before, keep));
    r.stages.push_back(digest("B", rec_b, r.summary.taskB_final, keep));
    return rec_b;
}

bool keep_histories(const ExperimentConfig& cfg, std::size_t seed_index) {
    return cfg.keep_histories && seed_index == 0;
}

/// A -> second-task protocol for each cell of one realisation. cells holds
/// (cell name, cell index, second task, anchor).
struct CellPlan {
    std::string name;
    int index = 0;
    Task task;
    AnchorSpec anchor;  // theta_ref / weights filled in after stage A
    bool gradient_weighted_from_stage_a = false;
};

std::vector<RunRecord> sequential_cells(const ExperimentConfig& cfg, const EnsembleSpec& spec, std::size_t seed_index,
                                        int steps, std::vector<CellPlan> plan) {
    std::vector<RunRecord> out;
    const Seed seed = cfg.seeds.at(seed_index);
    const bool keep = keep_histories(cfg, seed_index);
    std::optional<Realisation> real;
    GraphStats stats;
    std::optional<FirstStage> first;
    std::string stage_a_error;
    try {
        real = realise(spec, seed, cfg.theta_init_std);
        stats = graph_stats(real->graph);
        first = train_first_stage(cfg, *real, task_A(), steps);
    } catch (const std::exception& e) {
        stage_a_error = e.what();
    }
    std::vector<double> weights;
    for (auto& cell : plan) {
        RunRecord r = base_record(cfg, cell.name, cell.index, seed_index, spec, steps);
        r.second_task = cell.task;
        r.anchor = cell.anchor.mode;
        r.lambda = cell.anchor.lambda;
        if (real) attach_realisation(r, *real, stats);
        if (!first) {
            out.push_back(failed_record(std::move(r), stage_a_error));
            continue;
        }
        try {
            AnchorSpec anchor = cell.anchor;
            if (anchor.mode != AnchorMode::None) {
                anchor.theta_ref = first->record.final_theta;
                if (anchor.mode == AnchorMode::GradientWeighted) {
                    if (weights.empty()) {
                        weights = importance_weights(real->graph, {first->record.final_theta, cfg.conductance_floor},
                                                     real->terminals, task_A());
                    }
                    anchor.weights = weights;
                } else {
                    anchor.weights.assign(anchor.theta_ref.size(), 1.0);
                }
            }
            run_second_stage(r, cfg, *real, *first, cell.task, anchor, steps, keep);
            r.lambda = cell.anchor.lambda;
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            out.push_back(failed_record(std::move(r), e.what()));
        }
    }
    return out;
}

}  // namespace

// =============================================================================
// Experiments
// =============================================================================

ExperimentResult run_baseline(const ExperimentConfig& cfg) {
    cfg.validate();
    AnchorSpec anchor;
    anchor.mode = cfg.anchor_mode;
    anchor.lambda = cfg.lambda_grid.empty() ? 0.0 : cfg.lambda_grid.front();
    if (anchor.mode == AnchorMode::None) anchor.lambda = 0.0;
    std::string cell = "baseline";
    if (anchor.mode != AnchorMode::None) cell = std::string(to_string(anchor.mode)) + ":lambda=" + format_number(anchor.lambda);
    auto parts = run_jobs(cfg.seeds.size(), cfg.workers, [&](std::size_t i) {
        return sequential_cells(cfg, cfg.ensemble, i, cfg.steps, {CellPlan{cell, 0, make_task_alpha(0.0), anchor}});
    });
    return collect(cfg, std::move(parts));
}

ExperimentResult run_alpha_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const int stride = std::max(1, cfg.steps / 4);
    auto parts = run_jobs(cfg.seeds.size(), cfg.workers, [&](std::size_t i) {
        std::vector<RunRecord> out;
        const bool keep = keep_histories(cfg, i);
        const Task a = task_A();
        std::optional<Realisation> real;
        GraphStats stats;
        std::optional<FirstStage> first;
        std::string error;
        std::map<int, std::vector<double>> grad_a;  // per checkpoint step
        std::map<int, NetworkResponse> responses;
        try {
            real = realise(cfg.ensemble, cfg.seeds[i], cfg.theta_init_std);
            stats = graph_stats(real->graph);
            first = train_first_stage(cfg, *real, a, cfg.steps, stride);
            for (const auto& cp : first->record.checkpoints) {
                responses[cp.step] =
                    network_response(real->graph, {cp.theta, cfg.conductance_floor}, real->terminals, true);
            }
        } catch (const std::exception& e) {
            error = e.what();
        }
        for (std::size_t c = 0; c < cfg.alphas.size(); ++c) {
            const double alpha = cfg.alphas[c];
            const Task b = make_task_alpha(alpha);
            RunRecord r = base_record(cfg, alpha_cell(alpha), static_cast<int>(c), i, cfg.ensemble, cfg.steps);
            r.second_task = b;
            if (real) attach_realisation(r, *real, stats);
            if (!first) {
                out.push_back(failed_record(std::move(r), error));
                continue;
            }
            try {
                run_second_stage(r, cfg, *real, *first, b, AnchorSpec::none(), cfg.steps, keep);
                for (const auto& [step, resp] : responses) {
                    const auto ga = resp.loss_gradient(a);
                    const auto gb = resp.loss_gradient(b);
                    const auto suffix = "_t" + std::to_string(step);
                    r.summary.extras["omega" + suffix] = gradient_cosine(ga, gb);
                    double na = 0.0, nb = 0.0;
                    for (std::size_t k = 0; k < ga.size(); ++k) {
                        na += ga[k] * ga[k];
                        nb += gb[k] * gb[k];
                    }
                    r.summary.extras["gradA_norm" + suffix] = std::sqrt(na);
                    r.summary.extras["gradB_norm" + suffix] = std::sqrt(nb);
                }
                out.push_back(std::move(r));
            } catch (const std::exception& e) {
                out.push_back(failed_record(std::move(r), e.what()));
            }
        }
        return out;
    });
    auto result = collect(cfg, std::move(parts));

    // Per-seed comparison of the two ends of the sweep.
    std::map<int, double> f_zero, f_half;
    for (const auto& r : result.records) {
        if (r.failed || !r.second_task.alpha) continue;
        if (*r.second_task.alpha == 0.0) f_zero[r.seed_index] = r.summary.forgetting;
        if (*r.second_task.alpha == 0.5) f_half[r.seed_index] = r.summary.forgetting;
    }
    int paired = 0, ordered = 0;
    for (const auto& [s, f0] : f_zero) {
        const auto it = f_half.find(s);
        if (it == f_half.end()) continue;
        ++paired;
        if (f0 > it->second) ++ordered;
    }
    if (paired > 0) result.analysis["frac_seeds_F0_gt_Fhalf"] = static_cast<double>(ordered) / paired;
    return result;
}

ExperimentResult run_random_tasks(const ExperimentConfig& cfg) {
    cfg.validate();
    auto parts = run_jobs(cfg.seeds.size(), cfg.workers, [&](std::size_t i) {
        std::vector<CellPlan> plan;
        for (int j = 0; j < cfg.tasks_per_graph; ++j) {
            plan.push_back({"random", 0, sample_random_task(derive_seed(cfg.seeds[i], Stream::Tasks, j)), {}});
        }
        for (double alpha : cfg.alphas) plan.push_back({"deterministic", 1, make_task_alpha(alpha), {}});
        auto recs = sequential_cells(cfg, cfg.ensemble, i, cfg.steps, std::move(plan));
        // keep per-graph task order stable inside a cell
        int j = 0;
        for (auto& r : recs) r.summary.extras["task_index"] = j++;
        return recs;
    });
    auto result = collect(cfg, std::move(parts));

    std::vector<double> f, c, mse, overlap;
    for (const auto& r : result.records) {
        if (r.failed) continue;
        f.push_back(r.summary.forgetting);
        c.push_back(*r.extra("contrast"));
        mse.push_back(*r.extra("target_mse"));
        overlap.push_back(*r.extra("grad_overlap_init"));
    }
    auto put = [&](const std::string& key, auto&& fn, const std::vector<double>& x) {
        try {
            result.analysis[key] = fn(f, x);
        } catch (const std::exception&) {
        }
    };
    auto pearson_fn = [](const std::vector<double>& a, const std::vector<double>& b) { return pearson(a, b); };
    auto spearman_fn = [](const std::vector<double>& a, const std::vector<double>& b) { return spearman(a, b); };
    put("pearson_F_contrast", pearson_fn, c);
    put("pearson_F_target_mse", pearson_fn, mse);
    put("pearson_F_overlap", pearson_fn, overlap);
    put("spearman_F_contrast", spearman_fn, c);
    put("spearman_F_target_mse", spearman_fn, mse);
    put("spearman_F_overlap", spearman_fn, overlap);
    result.analysis["runs"] = static_cast<double>(f.size());
    return result;
}

ExperimentResult run_regularisation_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<CellPlan> plan{{"baseline", 0, make_task_alpha(0.0), AnchorSpec::none()}};
    for (AnchorMode mode : cfg.anchor_modes) {
        if (mode == AnchorMode::None) continue;
        for (double lambda : cfg.lambda_grid) {
            AnchorSpec a;
            a.mode = mode;
            a.lambda = lambda;
            plan.push_back({std::string(to_string(mode)) + ":lambda=" + format_number(lambda),
                            static_cast<int>(plan.size()), make_task_alpha(0.0), a});
        }
    }
    auto parts = run_jobs(cfg.seeds.size(), cfg.workers,
                          [&](std::size_t i) { return sequential_cells(cfg, cfg.ensemble, i, cfg.steps, plan); });
    return collect(cfg, std::move(parts));
}

ExperimentResult run_localisation(const ExperimentConfig& cfg) {
    cfg.validate();
    auto parts = run_jobs(cfg.seeds.size(), cfg.workers, [&](std::size_t i) {
        return sequential_cells(cfg, cfg.ensemble, i, cfg.steps,
                                {CellPlan{"localisation", 0, make_task_alpha(0.0), AnchorSpec::none()}});
    });
    return collect(cfg, std::move(parts));
}

ExperimentResult run_recovery(const ExperimentConfig& cfg) {
    cfg.validate();
    auto parts = run_jobs(cfg.seeds.size(), cfg.workers, [&](std::size_t i) {
        RunRecord r = base_record(cfg, "recovery", 0, i, cfg.ensemble, cfg.steps);
        const bool keep = keep_histories(cfg, i);
        try {
            const auto real = realise(cfg.ensemble, cfg.seeds[i], cfg.theta_init_std);
            attach_realisation(r, real, graph_stats(real.graph));
            const auto first = train_first_stage(cfg, real, task_A(), cfg.steps);
            const auto rec_b = run_second_stage(r, cfg, real, first, make_task_alpha(0.0), AnchorSpec::none(),
                                                cfg.steps, keep);
            const TrainConfig tc{cfg.learning_rate, cfg.steps, 0};
            const auto rec_c =
                train(real.graph, {rec_b.final_theta, cfg.conductance_floor}, real.terminals, task_A(), tc);
            const double retrain =
                task_loss(real.graph, {rec_c.final_theta, cfg.conductance_floor}, real.terminals, task_A());
            r.summary.extras["lA_retrain"] = retrain;
            r.stages.push_back(digest("A2", rec_c, retrain, keep));
        } catch (const std::exception& e) {
            r = failed_record(std::move(r), e.what());
        }
        return std::vector<RunRecord>{std::move(r)};
    });
    return collect(cfg, std::move(parts));
}

ExperimentResult run_topology_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::size_t n_seeds = cfg.seeds.size();
    auto parts = run_jobs(cfg.kinds.size() * n_seeds, cfg.workers, [&](std::size_t job) {
        const std::size_t k = job / n_seeds;
        const std::size_t i = job % n_seeds;
        const Ensemble kind = cfg.kinds[k];
        return sequential_cells(cfg, topology_spec(kind, cfg.ensemble.nodes), i, cfg.steps,
                                {CellPlan{std::string(to_string(kind)), static_cast<int>(k), make_task_alpha(0.0),
                                          AnchorSpec::none()}});
    });
    return collect(cfg, std::move(parts));
}

ExperimentResult run_distance_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    auto parts = run_jobs(cfg.seeds.size(), cfg.workers, [&](std::size_t i) {
        std::vector<RunRecord> out;
        const Seed seed = cfg.seeds[i];
        const bool keep = keep_histories(cfg, i);
        std::optional<Realisation> real;
        GraphStats stats;
        try {
            real = realise(cfg.ensemble, seed, cfg.theta_init_std);
            stats = graph_stats(real->graph);
        } catch (const std::exception& e) {
            for (std::size_t c = 0; c < cfg.distances.size(); ++c) {
                RunRecord r = base_record(cfg, "d=" + std::to_string(cfg.distances[c]), static_cast<int>(c), i,
                                          cfg.ensemble, cfg.steps);
                out.push_back(failed_record(std::move(r), e.what()));
            }
            return out;
        }
        for (std::size_t c = 0; c < cfg.distances.size(); ++c) {
            const int d = cfg.distances[c];
            const auto output = select_output_at_distance(real->graph, real->terminals.input_a,
                                                          real->terminals.input_b, d,
                                                          derive_seed(seed, Stream::DistanceOutput, d));
            if (!output) continue;  // no eligible node at this distance
            Realisation at_d = *real;
            at_d.terminals.output = *output;
            RunRecord r = base_record(cfg, "d=" + std::to_string(d), static_cast<int>(c), i, cfg.ensemble, cfg.steps);
            attach_realisation(r, at_d, stats);
            r.d_out = d;
            try {
                const auto first = train_first_stage(cfg, at_d, task_A(), cfg.steps);
                run_second_stage(r, cfg, at_d, first, make_task_alpha(0.0), AnchorSpec::none(), cfg.steps, keep);
                r.summary.extras["d_out"] = d;
                out.push_back(std::move(r));
            } catch (const std::exception& e) {
                out.push_back(failed_record(std::move(r), e.what()));
            }
        }
        return out;
    });
    return collect(cfg, std::move(parts));
}

ExperimentResult run_size_budget_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    struct Job {
        std::size_t cell;
        int nodes;
        int steps;
        std::size_t seed_index;
    };
    std::vector<Job> jobs;
    std::size_t cell = 0;
    for (int n : cfg.sizes) {
        for (int t : cfg.budgets) {
            for (std::size_t i = 0; i < cfg.seeds.size(); ++i) jobs.push_back({cell, n, t, i});
            ++cell;
        }
    }
    // Longest jobs first for better load balance.
    std::stable_sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
        return static_cast<double>(a.steps) * a.nodes * a.nodes * a.nodes >
               static_cast<double>(b.steps) * b.nodes * b.nodes * b.nodes;
    });
    auto parts = run_jobs(jobs.size(), cfg.workers, [&](std::size_t j) {
        const Job& job = jobs[j];
        const auto spec = EnsembleSpec::erdos_renyi(job.nodes, 6.0 / (job.nodes - 1));
        const std::string name = "N=" + std::to_string(job.nodes) + "/T=" + std::to_string(job.steps);
        return sequential_cells(cfg, spec, job.seed_index, job.steps,
                                {CellPlan{name, static_cast<int>(job.cell), make_task_alpha(0.0), AnchorSpec::none()}});
    });
    return collect(cfg, std::move(parts));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const std::string_view name = cfg.name;
    if (name == "baseline") return run_baseline(cfg);
    if (name == "alpha-sweep") return run_alpha_sweep(cfg);
    if (name == "random-tasks") return run_random_tasks(cfg);
    if (name == "reg-sweep") return run_regularisation_sweep(cfg);
    if (name == "localisation") return run_localisation(cfg);
    if (name == "recovery") return run_recovery(cfg);
    if (name == "topology") return run_topology_sweep(cfg);
    if (name == "distance") return run_distance_sweep(cfg);
    if (name == "size-budget") return run_size_budget_sweep(cfg);
    throw std::invalid_argument("unknown experiment '" + cfg.name + "'");
}

// =============================================================================
// Aggregation
// =============================================================================

std::optional<double> metric_value(const RunRecord& r, std::string_view metric) {
    if (metric == "forgetting") return r.summary.forgetting;
    if (metric == "lB_final") return r.summary.taskB_final;
    if (metric == "lA_before") return r.summary.taskA_before;
    if (metric == "lA_after") return r.summary.taskA_after;
    if (metric == "E") return static_cast<double>(r.edges);
    if (metric == "mean_shortest_path") return r.summary.graph_stats.mean_shortest_path;
    if (metric == "clustering") return r.summary.graph_stats.clustering;
    if (metric == "degree_variance") return r.summary.graph_stats.degree_variance;
    return r.extra(std::string(metric));
}

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records) {
    std::map<int, AggregateRow> rows;
    std::map<int, std::map<std::string, std::vector<double>, std::less<>>> values;
    for (const auto& r : records) {
        auto& row = rows[r.cell_index];
        row.experiment = r.experiment;
        row.cell = r.cell;
        row.cell_index = r.cell_index;
        ++row.runs;
        if (r.failed) {
            ++row.failed;
            continue;
        }
        if (r.summary.excluded) {
            ++row.excluded;
            continue;
        }
        ++row.used;
        for (auto metric : kAggregateMetrics) {
            if (const auto v = metric_value(r, metric)) values[r.cell_index][std::string(metric)].push_back(*v);
        }
    }
    std::vector<AggregateRow> out;
    for (auto& [idx, row] : rows) {
        for (const auto& [metric, v] : values[idx]) row.stats[metric] = ensemble_stats(v);
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace rnet
