#include "rnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace rnet {

double gradient_cosine(std::span<const double> g1, std::span<const double> g2) {
    if (g1.size() != g2.size()) throw std::invalid_argument("gradient_cosine: length mismatch");
    double dot = 0.0, n1 = 0.0, n2 = 0.0;
    for (std::size_t k = 0; k < g1.size(); ++k) {
        dot += g1[k] * g2[k];
        n1 += g1[k] * g1[k];
        n2 += g2[k] * g2[k];
    }
    return dot / (std::sqrt(n1) * std::sqrt(n2) + kCosineEpsilon);
}

Concentration update_concentration(std::span<const double> delta, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must be in (0,1]");
    if (delta.empty()) return {1.0, true};
    std::vector<double> mag(delta.size());
    std::transform(delta.begin(), delta.end(), mag.begin(), [](double d) { return std::abs(d); });
    std::sort(mag.begin(), mag.end(), std::greater<>());
    const double total = std::accumulate(mag.begin(), mag.end(), 0.0);
    if (total == 0.0) return {1.0, true};
    auto top = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(mag.size()) - 1e-9));
    top = std::clamp<std::size_t>(top, 1, mag.size());
    const double head = std::accumulate(mag.begin(), mag.begin() + static_cast<std::ptrdiff_t>(top), 0.0);
    return {head / total, false};
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("pearson: need at least two points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("pearson: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> mid_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
    const auto rx = mid_ranks(x);
    const auto ry = mid_ranks(y);
    return pearson(rx, ry);
}

EnsembleStats ensemble_stats(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("ensemble_stats: no values");
    EnsembleStats s;
    s.count = values.size();
    const double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std_dev = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

RunSummary RunSummary::from_losses(double taskA_before, double taskA_after, double taskB_final,
                                   std::optional<double> exclusion_threshold) {
    RunSummary s;
    s.taskA_before = taskA_before;
    s.taskA_after = taskA_after;
    s.taskB_final = taskB_final;
    s.forgetting = rnet::forgetting(taskA_before, taskA_after);
    s.excluded = exclusion_threshold.has_value() && taskA_before >= *exclusion_threshold;
    return s;
}

}  // namespace rnet
