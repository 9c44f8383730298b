#pragma once

#include "rnet/graphs.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace rnet {

/// Guard in the denominator of gradient_cosine.
inline constexpr double kCosineEpsilon = 1e-15;

/// Raised when a correlation is undefined (constant input).
class UndefinedStatistic : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// F = L_A(after) - L_A(before).
constexpr double forgetting(double loss_before, double loss_after) noexcept { return loss_after - loss_before; }

double gradient_cosine(std::span<const double> g1, std::span<const double> g2);

struct Concentration {
    double value = 1.0;
    bool degenerate = false;  // all updates zero
};

/// Share of sum |delta| carried by the ceil(fraction * E) largest entries.
Concentration update_concentration(std::span<const double> delta, double fraction);

double pearson(std::span<const double> x, std::span<const double> y);

/// Average (mid) ranks, 1-based.
std::vector<double> mid_ranks(std::span<const double> x);

/// Pearson correlation of mid-ranks.
double spearman(std::span<const double> x, std::span<const double> y);

struct EnsembleStats {
    double mean = 0.0;
    std::optional<double> std_dev;  // sample std (n-1); empty for a single value
    std::size_t count = 0;
};

/// Throws std::invalid_argument on empty input.
EnsembleStats ensemble_stats(std::span<const double> values);

struct RunSummary {
    double forgetting = 0.0;
    double taskA_before = 0.0;
    double taskA_after = 0.0;
    double taskB_final = 0.0;
    bool excluded = false;
    GraphStats graph_stats;
    std::map<std::string, double> extras;

    /// Builds the summary and applies the exclusion rule when threshold is set.
    static RunSummary from_losses(double taskA_before, double taskA_after, double taskB_final,
                                  std::optional<double> exclusion_threshold = std::nullopt);
};

}  // namespace rnet
