#pragma once

#include <string>
#include <vector>

namespace rnet::svg {

enum class Style { Line, Scatter, LineMarkers, Bars };

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> y_err;  // optional, same length as y
    std::vector<double> x_err;  // optional, same length as x
    Style style = Style::LineMarkers;
};

/// Minimal 2-D chart rendered to standalone SVG.
struct Chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    int width = 640;
    int height = 420;

    std::string render() const;
};

/// Bar series of bin counts for values on [lo, hi] split into bins.
Series histogram(std::string label, const std::vector<double>& values, double lo, double hi, int bins);

}  // namespace rnet::svg
