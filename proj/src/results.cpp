#include "rnet/results.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rnet {

using nlohmann::json;

OutputFormat parse_output_format(std::string_view text) {
    if (text == "csv") return OutputFormat::Csv;
    if (text == "json") return OutputFormat::Json;
    if (text == "both") return OutputFormat::Both;
    throw std::invalid_argument("unknown output format '" + std::string(text) + "'");
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

std::string join(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += fields[i];
    }
    line += '\n';
    return line;
}

double task_loss_from_outputs(const Task& task, const std::array<double, 2>& outputs) {
    double sum = 0.0;
    for (std::size_t m = 0; m < Task::size(); ++m) {
        const double r = outputs[m] - task.targets[m];
        sum += r * r;
    }
    return sum / static_cast<double>(Task::size());
}

}  // namespace

std::string format_run_csv(const std::vector<RunRecord>& records) {
    std::vector<std::string> header(kRunColumns.begin(), kRunColumns.end());
    std::string out = join(header);
    for (const auto& r : records) {
        const bool ok = !r.failed;
        std::vector<std::string> f;
        f.push_back(r.experiment);
        f.push_back(r.cell);
        f.push_back(std::to_string(r.seed));
        f.push_back(std::to_string(r.nodes));
        f.push_back(std::to_string(r.edges));
        f.emplace_back(to_string(r.ensemble));
        f.push_back(r.d_out ? std::to_string(*r.d_out) : std::string());
        f.push_back(opt(r.second_task.alpha));
        f.push_back(format_real(r.second_task.y1()));
        f.push_back(format_real(r.second_task.y2()));
        f.push_back(format_real(r.lambda));
        f.emplace_back(to_string(r.anchor));
        f.push_back(std::to_string(r.steps));
        f.push_back(ok ? format_real(r.summary.taskA_before) : "");
        f.push_back(ok ? format_real(r.summary.taskA_after) : "");
        f.push_back(ok ? format_real(r.summary.taskB_final) : "");
        f.push_back(ok ? format_real(r.summary.forgetting) : "");
        f.push_back(format_real(target_contrast(r.second_task)));
        f.push_back(opt(r.extra("grad_overlap_init")));
        f.push_back(opt(r.extra("top10_mass")));
        f.push_back(opt(r.extra("top20_mass")));
        f.push_back(opt(r.extra("pearson_IU")));
        f.push_back(opt(r.extra("spearman_IU")));
        f.push_back(r.summary.excluded ? "1" : "0");
        f.push_back(r.failed ? "1" : "0");
        out += join(f);
    }
    return out;
}

std::string format_aggregate_csv(const std::vector<AggregateRow>& rows) {
    std::vector<std::string> header{"experiment", "cell", "runs", "used", "excluded", "failed"};
    for (auto m : kAggregateMetrics) {
        header.push_back(std::string(m) + "_mean");
        header.push_back(std::string(m) + "_std");
    }
    std::string out = join(header);
    for (const auto& row : rows) {
        std::vector<std::string> f{row.experiment,           row.cell,
                                   std::to_string(row.runs), std::to_string(row.used),
                                   std::to_string(row.excluded), std::to_string(row.failed)};
        for (auto m : kAggregateMetrics) {
            const auto it = row.stats.find(m);
            if (it == row.stats.end()) {
                f.emplace_back();
                f.emplace_back();
            } else {
                f.push_back(format_real(it->second.mean));
                f.push_back(opt(it->second.std_dev));
            }
        }
        out += join(f);
    }
    return out;
}

// =============================================================================
// JSON
// =============================================================================

json config_json(const ExperimentConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    j["ensemble"] = {{"kind", to_string(cfg.ensemble.kind)}, {"N", cfg.ensemble.nodes},
                     {"er_p", cfg.ensemble.er_p},            {"sw_k", cfg.ensemble.sw_k},
                     {"sw_beta", cfg.ensemble.sw_beta},      {"ba_m", cfg.ensemble.ba_m},
                     {"rg_r", cfg.ensemble.rg_r}};
    j["seeds"] = cfg.seeds;
    j["lr"] = cfg.learning_rate;
    j["steps"] = cfg.steps;
    j["theta_init_std"] = cfg.theta_init_std;
    j["conductance_floor"] = cfg.conductance_floor;
    j["lambda_grid"] = cfg.lambda_grid;
    j["anchor_mode"] = to_string(cfg.anchor_mode);
    json modes = json::array();
    for (auto m : cfg.anchor_modes) modes.push_back(to_string(m));
    j["anchor_modes"] = modes;
    j["apply_exclusion"] = cfg.apply_exclusion;
    j["exclusion_threshold"] = cfg.exclusion_threshold;
    j["alphas"] = cfg.alphas;
    j["tasks_per_graph"] = cfg.tasks_per_graph;
    j["distances"] = cfg.distances;
    json kinds = json::array();
    for (auto k : cfg.kinds) kinds.push_back(to_string(k));
    j["kinds"] = kinds;
    j["sizes"] = cfg.sizes;
    j["budgets"] = cfg.budgets;
    j["workers"] = cfg.workers;
    return j;
}

json record_json(const RunRecord& r) {
    json j;
    j["experiment"] = r.experiment;
    j["cell"] = r.cell;
    j["seed"] = r.seed;
    j["seed_index"] = r.seed_index;
    j["N"] = r.nodes;
    j["E"] = r.edges;
    j["ensemble"] = to_string(r.ensemble);
    j["graph_resamples"] = r.resamples;
    j["terminals"] = {{"inputs", {r.terminals.input_a, r.terminals.input_b}}, {"output", r.terminals.output}};
    j["d_out"] = r.d_out ? json(*r.d_out) : json(nullptr);
    json task{{"y1", r.second_task.y1()}, {"y2", r.second_task.y2()}};
    if (r.second_task.alpha) task["alpha"] = *r.second_task.alpha;
    j["task"] = task;
    j["lambda"] = r.lambda;
    j["anchor_mode"] = to_string(r.anchor);
    j["steps"] = r.steps;
    j["lr"] = r.learning_rate;
    j["failed"] = r.failed;
    if (r.failed) j["failure"] = r.failure;
    j["summary"] = {{"forgetting", r.summary.forgetting},
                    {"lA_before", r.summary.taskA_before},
                    {"lA_after", r.summary.taskA_after},
                    {"lB_final", r.summary.taskB_final},
                    {"excluded", r.summary.excluded},
                    {"graph_stats",
                     {{"E", r.summary.graph_stats.edge_count},
                      {"mean_shortest_path", r.summary.graph_stats.mean_shortest_path},
                      {"clustering", r.summary.graph_stats.clustering},
                      {"degree_variance", r.summary.graph_stats.degree_variance}}},
                    {"extras", r.summary.extras}};
    json stages = json::array();
    for (const auto& s : r.stages) {
        json st{{"name", s.name}, {"final_loss", s.final_loss}};
        if (!s.loss_history.empty()) {
            st["loss_history"] = s.loss_history;
            st["output_history"] = s.output_history;
        }
        stages.push_back(st);
    }
    j["stages"] = stages;
    return j;
}

json aggregate_json(const std::vector<AggregateRow>& rows) {
    json out = json::array();
    for (const auto& row : rows) {
        json j{{"cell", row.cell}, {"runs", row.runs}, {"used", row.used}, {"excluded", row.excluded},
               {"failed", row.failed}};
        json stats = json::object();
        for (const auto& [metric, s] : row.stats) {
            stats[metric] = {{"mean", s.mean}, {"std", s.std_dev ? json(*s.std_dev) : json(nullptr)}, {"n", s.count}};
        }
        j["stats"] = stats;
        out.push_back(j);
    }
    return out;
}

// =============================================================================
// Plots
// =============================================================================

namespace {

using svg::Chart;
using svg::Series;
using svg::Style;

const RunRecord* representative(const ExperimentResult& result, int cell_index = 0) {
    for (const auto& r : result.records)
        if (!r.failed && r.cell_index == cell_index && !r.stages.empty() && !r.stages.front().loss_history.empty())
            return &r;
    return nullptr;
}

Chart stage_loss_chart(const RunRecord& r, const std::string& title) {
    Chart c;
    c.title = title;
    c.x_label = "gradient step";
    c.y_label = "loss";
    Series la{"Task A loss", {}, {}, {}, {}, Style::Line};
    Series lb{"Task B loss", {}, {}, {}, {}, Style::Line};
    int offset = 0;
    for (const auto& stage : r.stages) {
        for (std::size_t t = 0; t < stage.output_history.size(); ++t) {
            const double x = offset + static_cast<double>(t);
            la.x.push_back(x);
            la.y.push_back(task_loss_from_outputs(task_A(), stage.output_history[t]));
            lb.x.push_back(x);
            lb.y.push_back(task_loss_from_outputs(r.second_task, stage.output_history[t]));
        }
        offset += static_cast<int>(stage.output_history.size());
    }
    c.series = {la, lb};
    return c;
}

void add_mean_point(Series& s, double x, const AggregateRow& row, std::string_view metric) {
    const auto it = row.stats.find(metric);
    if (it == row.stats.end()) return;
    s.x.push_back(x);
    s.y.push_back(it->second.mean);
    s.y_err.push_back(it->second.std_dev.value_or(0.0));
}

void add_tradeoff_point(Series& s, const AggregateRow& row) {
    const auto f = row.stats.find("forgetting");
    const auto b = row.stats.find("lB_final");
    if (f == row.stats.end() || b == row.stats.end()) return;
    s.x.push_back(b->second.mean);
    s.x_err.push_back(b->second.std_dev.value_or(0.0));
    s.y.push_back(f->second.mean);
    s.y_err.push_back(f->second.std_dev.value_or(0.0));
}

std::vector<double> values_of(const ExperimentResult& result, std::string_view metric) {
    std::vector<double> v;
    for (const auto& r : result.records) {
        if (r.failed || r.summary.excluded) continue;
        if (auto x = metric_value(r, metric)) v.push_back(*x);
    }
    return v;
}

}  // namespace

std::vector<std::pair<std::string, Chart>> experiment_plots(const ExperimentResult& result) {
    std::vector<std::pair<std::string, Chart>> plots;
    const auto rows = aggregate(result.records);
    const std::string& name = result.experiment;

    if (name == "baseline" || name == "recovery") {
        if (const auto* r = representative(result)) {
            plots.emplace_back("loss_curves", stage_loss_chart(*r, name == "baseline" ? "Sequential training A -> B"
                                                                                      : "Task sequence A -> B -> A"));
        }
        Chart h;
        h.title = "Forgetting across realisations";
        h.x_label = "forgetting F";
        h.y_label = "count";
        h.series = {svg::histogram("F", values_of(result, "forgetting"), -0.2, 1.0, 24)};
        plots.emplace_back("forgetting_hist", h);
    } else if (name == "alpha-sweep") {
        std::map<std::string, Series> by_step;
        std::map<double, std::map<std::string, std::vector<double>>> omega;
        for (const auto& r : result.records) {
            if (r.failed || !r.second_task.alpha) continue;
            for (const auto& [key, v] : r.summary.extras)
                if (key.rfind("omega_t", 0) == 0) omega[*r.second_task.alpha][key].push_back(v);
        }
        for (const auto& [alpha, per_key] : omega) {
            for (const auto& [key, vals] : per_key) {
                auto& s = by_step[key];
                s.label = "step " + key.substr(7);
                s.style = Style::Scatter;
                const auto st = ensemble_stats(vals);
                s.x.push_back(alpha);
                s.y.push_back(st.mean);
                s.y_err.push_back(st.std_dev.value_or(0.0));
            }
        }
        Chart c;
        c.title = "Gradient overlap vs alpha";
        c.x_label = "alpha";
        c.y_label = "cosine similarity";
        for (auto& [k, s] : by_step) c.series.push_back(s);
        plots.emplace_back("gradient_overlap", c);

        Chart f;
        f.title = "Forgetting vs alpha";
        f.x_label = "alpha";
        f.y_label = "forgetting F";
        Series s{"mean +- std", {}, {}, {}, {}, Style::LineMarkers};
        for (const auto& row : rows) {
            for (const auto& r : result.records)
                if (r.cell_index == row.cell_index && r.second_task.alpha) {
                    add_mean_point(s, *r.second_task.alpha, row, "forgetting");
                    break;
                }
        }
        f.series = {s};
        plots.emplace_back("forgetting_alpha", f);
    } else if (name == "random-tasks") {
        Chart c;
        c.title = "Forgetting vs target contrast";
        c.x_label = "target contrast c_B";
        c.y_label = "forgetting F";
        Series rnd{"random tasks", {}, {}, {}, {}, Style::Scatter};
        Series det{"alpha tasks", {}, {}, {}, {}, Style::Scatter};
        for (const auto& r : result.records) {
            if (r.failed) continue;
            auto& s = r.cell == "random" ? rnd : det;
            s.x.push_back(target_contrast(r.second_task));
            s.y.push_back(r.summary.forgetting);
        }
        c.series = {rnd, det};
        plots.emplace_back("forgetting_contrast", c);
    } else if (name == "reg-sweep") {
        Chart c;
        c.title = "Forgetting-adaptation trade-off";
        c.x_label = "final Task B loss";
        c.y_label = "forgetting F";
        Series base{"baseline", {}, {}, {}, {}, Style::Scatter};
        Series uni{"uniform", {}, {}, {}, {}, Style::LineMarkers};
        Series gw{"gradient-weighted", {}, {}, {}, {}, Style::LineMarkers};
        for (const auto& row : rows) {
            if (row.cell.rfind("uniform", 0) == 0) add_tradeoff_point(uni, row);
            else if (row.cell.rfind("gw", 0) == 0) add_tradeoff_point(gw, row);
            else add_tradeoff_point(base, row);
        }
        c.series = {base, uni, gw};
        plots.emplace_back("tradeoff", c);
    } else if (name == "localisation") {
        Chart c;
        c.title = "Update concentration";
        c.x_label = "fraction of total |dtheta|";
        c.y_label = "count";
        c.series = {svg::histogram("top 10%", values_of(result, "top10_mass"), 0.0, 1.0, 20),
                    svg::histogram("top 20%", values_of(result, "top20_mass"), 0.0, 1.0, 20)};
        plots.emplace_back("update_concentration", c);
        Chart k;
        k.title = "Current-update correlation";
        k.x_label = "correlation";
        k.y_label = "count";
        k.series = {svg::histogram("Pearson", values_of(result, "pearson_IU"), -1.0, 1.0, 20),
                    svg::histogram("Spearman", values_of(result, "spearman_IU"), -1.0, 1.0, 20)};
        plots.emplace_back("current_update_correlation", k);
    } else if (name == "topology") {
        Chart c;
        c.title = "Topology trade-off";
        c.x_label = "final Task B loss";
        c.y_label = "forgetting F";
        for (const auto& row : rows) {
            Series s{row.cell, {}, {}, {}, {}, Style::Scatter};
            add_tradeoff_point(s, row);
            c.series.push_back(s);
        }
        plots.emplace_back("tradeoff", c);
    } else if (name == "distance") {
        Chart c;
        c.title = "Effect of input-output distance";
        c.x_label = "d_out";
        c.y_label = "mean +- std";
        Series f{"forgetting", {}, {}, {}, {}, Style::LineMarkers};
        Series b{"Task B loss", {}, {}, {}, {}, Style::LineMarkers};
        for (const auto& row : rows) {
            const double d = std::stod(row.cell.substr(2));
            add_mean_point(f, d, row, "forgetting");
            add_mean_point(b, d, row, "lB_final");
        }
        c.series = {f, b};
        plots.emplace_back("distance", c);
    } else if (name == "size-budget") {
        for (const auto& [metric, stem, label] :
             {std::tuple<std::string_view, std::string, std::string>{"lB_final", "taskB_size_budget", "final Task B loss"},
              {"forgetting", "forgetting_size_budget", "forgetting F"}}) {
            Chart c;
            c.title = label + " vs network size";
            c.x_label = "N";
            c.y_label = label;
            std::map<int, Series> by_budget;
            for (const auto& row : rows) {
                const auto slash = row.cell.find('/');
                const int n = std::stoi(row.cell.substr(2, slash - 2));
                const int t = std::stoi(row.cell.substr(slash + 3));
                auto& s = by_budget[t];
                s.label = "T=" + std::to_string(t);
                add_mean_point(s, n, row, metric);
            }
            for (auto& [t, s] : by_budget) c.series.push_back(s);
            plots.emplace_back(stem, c);
        }
    }
    return plots;
}

// =============================================================================
// Emission
// =============================================================================

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

}  // namespace

std::vector<std::filesystem::path> emit_results(const ExperimentResult& result, const EmitOptions& options) {
    if (result.records.empty()) throw std::invalid_argument("no records to emit");
    std::error_code ec;
    std::filesystem::create_directories(options.directory, ec);
    if (ec || !std::filesystem::is_directory(options.directory)) {
        throw std::runtime_error("cannot create output directory '" + options.directory.string() + "'");
    }
    const auto rows = aggregate(result.records);
    const std::string stem = result.experiment;
    std::vector<std::filesystem::path> written;
    auto emit = [&](const std::string& file, const std::string& content) {
        const auto path = options.directory / file;
        write_file(path, content);
        written.push_back(path);
    };

    const bool csv = options.format != OutputFormat::Json;
    const bool js = options.format != OutputFormat::Csv;
    if (csv) {
        emit(stem + "_runs.csv", format_run_csv(result.records));
        emit(stem + "_aggregate.csv", format_aggregate_csv(rows));
    }
    if (js) {
        json runs = json::array();
        for (const auto& r : result.records) runs.push_back(record_json(r));
        emit(stem + "_runs.json", runs.dump(1) + "\n");
    }
    if (options.plots) {
        for (const auto& [suffix, chart] : experiment_plots(result)) {
            emit(stem + "_" + suffix + ".svg", chart.render());
        }
    }

    json manifest;
    manifest["software"] = {{"name", kSoftwareName}, {"version", kSoftwareVersion}};
    manifest["experiment"] = result.experiment;
    manifest["config"] = config_json(result.config);
    manifest["seed_scheme"] =
        "realisation seed = master + i; substreams splitmix64(seed, stream, index): 0 graph, 1 terminals(0)/theta0(1), "
        "2 tasks(j), 3 distance output(d); disconnected graph samples retried with stream seed + attempt";
    manifest["analysis"] = result.analysis;
    manifest["aggregate"] = aggregate_json(rows);
    json files = json::array();
    for (const auto& p : written) files.push_back(p.filename().string());
    manifest["files"] = files;
    emit(stem + "_manifest.json", manifest.dump(2) + "\n");
    return written;
}

// =============================================================================
// CSV reading
// =============================================================================

int CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

CsvTable parse_csv(std::string_view text) {
    CsvTable table;
    bool first = true;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (first) {
            table.header = std::move(fields);
            first = false;
        } else {
            table.rows.push_back(std::move(fields));
        }
    }
    return table;
}

}  // namespace rnet
