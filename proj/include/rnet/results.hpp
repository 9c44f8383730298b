#pragma once

#include "rnet/experiments.hpp"
#include "rnet/svg.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rnet {

inline constexpr std::string_view kSoftwareName = "rnet";
inline constexpr std::string_view kSoftwareVersion = "0.1.0";

/// Row CSV columns, fixed order.
inline constexpr std::array<std::string_view, 25> kRunColumns{
    "experiment", "cell",      "seed",          "N",           "E",          "ensemble",    "d_out",
    "alpha",      "y1",        "y2",            "lambda",      "anchor_mode", "steps",      "lA_before",
    "lA_after",   "lB_final",  "forgetting",    "contrast",    "grad_overlap_init",         "top10_mass",
    "top20_mass", "pearson_IU", "spearman_IU",  "excluded",    "failed"};

enum class OutputFormat { Csv, Json, Both };

OutputFormat parse_output_format(std::string_view text);

struct EmitOptions {
    std::filesystem::path directory = "results";
    OutputFormat format = OutputFormat::Csv;
    bool plots = false;
};

/// Nine significant digits, C locale.
std::string format_real(double v);

std::string format_run_csv(const std::vector<RunRecord>& records);
std::string format_aggregate_csv(const std::vector<AggregateRow>& rows);

nlohmann::json config_json(const ExperimentConfig& cfg);
nlohmann::json record_json(const RunRecord& record);
nlohmann::json aggregate_json(const std::vector<AggregateRow>& rows);

/// SVG charts for an experiment, keyed by file stem suffix.
std::vector<std::pair<std::string, svg::Chart>> experiment_plots(const ExperimentResult& result);

/// Writes <experiment>_runs.csv, <experiment>_aggregate.csv, <experiment>_runs.json,
/// <experiment>_manifest.json and optional SVG plots. Returns the paths written.
/// Throws std::runtime_error when the directory cannot be created or written.
std::vector<std::filesystem::path> emit_results(const ExperimentResult& result, const EmitOptions& options);

/// Minimal CSV reader for the files written above (no quoting).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);

}  // namespace rnet
