#include "rnet/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace rnet::svg {

namespace {

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }

    void finish() {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
};

}  // namespace

Series histogram(std::string label, const std::vector<double>& values, double lo, double hi, int bins) {
    Series s;
    s.label = std::move(label);
    s.style = Style::Bars;
    const double width = (hi - lo) / bins;
    std::vector<double> counts(bins, 0.0);
    for (double v : values) {
        if (!std::isfinite(v)) continue;
        int b = static_cast<int>(std::floor((v - lo) / width));
        counts[std::clamp(b, 0, bins - 1)] += 1.0;
    }
    for (int b = 0; b < bins; ++b) {
        s.x.push_back(lo + (b + 0.5) * width);
        s.y.push_back(counts[b]);
    }
    return s;
}

std::string Chart::render() const {
    const double left = 70, right = 160, top = 40, bottom = 55;
    const double pw = width - left - right;
    const double ph = height - top - bottom;

    Range xr, yr;
    double bar_width = 0.0;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double xe = i < s.x_err.size() ? s.x_err[i] : 0.0;
            xr.add(s.x[i] - xe);
            xr.add(s.x[i] + xe);
        }
        for (std::size_t i = 0; i < s.y.size(); ++i) {
            const double ye = i < s.y_err.size() ? s.y_err[i] : 0.0;
            yr.add(s.y[i] - ye);
            yr.add(s.y[i] + ye);
        }
        if (s.style == Style::Bars) {
            yr.add(0.0);
            if (s.x.size() >= 2) bar_width = std::abs(s.x[1] - s.x[0]);
            if (!s.x.empty()) {
                xr.add(s.x.front() - 0.5 * bar_width);
                xr.add(s.x.back() + 0.5 * bar_width);
            }
        }
    }
    xr.finish();
    yr.finish();
    auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto py = [&](double y) { return top + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(title) << "</text>\n";
    os << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
       << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int t = 0; t <= 5; ++t) {
        const double xv = xr.lo + (xr.hi - xr.lo) * t / 5.0;
        const double yv = yr.lo + (yr.hi - yr.lo) * t / 5.0;
        os << "<line x1=\"" << num(px(xv)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(px(xv)) << "\" y2=\""
           << num(top + ph + 5) << "\" stroke=\"black\"/>";
        os << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">"
           << tick_label(xv) << "</text>\n";
        os << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << num(left) << "\" y2=\""
           << num(py(yv)) << "\" stroke=\"black\"/>";
        os << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">"
           << tick_label(yv) << "</text>\n";
    }
    os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(height - 12.0) << "\" text-anchor=\"middle\">"
       << escape(x_label) << "</text>\n";
    os << "<text transform=\"translate(18," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(y_label) << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* colour = kPalette[si % kPalette.size()];
        const std::size_t n = std::min(s.x.size(), s.y.size());
        if (s.style == Style::Bars) {
            const double bw = std::max(1.0, bar_width / (xr.hi - xr.lo) * pw / static_cast<double>(series.size()));
            for (std::size_t i = 0; i < n; ++i) {
                const double x0 = px(s.x[i] - 0.5 * bar_width) + bw * static_cast<double>(si);
                os << "<rect x=\"" << num(x0) << "\" y=\"" << num(py(s.y[i])) << "\" width=\"" << num(bw)
                   << "\" height=\"" << num(py(0.0) - py(s.y[i])) << "\" fill=\"" << colour
                   << "\" fill-opacity=\"0.7\"/>\n";
            }
        }
        if ((s.style == Style::Line || s.style == Style::LineMarkers) && n >= 2) {
            os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < n; ++i) os << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
            os << "\"/>\n";
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i < s.y_err.size() && s.y_err[i] > 0.0) {
                os << "<line x1=\"" << num(px(s.x[i])) << "\" y1=\"" << num(py(s.y[i] - s.y_err[i])) << "\" x2=\""
                   << num(px(s.x[i])) << "\" y2=\"" << num(py(s.y[i] + s.y_err[i])) << "\" stroke=\"" << colour
                   << "\"/>\n";
            }
            if (i < s.x_err.size() && s.x_err[i] > 0.0) {
                os << "<line x1=\"" << num(px(s.x[i] - s.x_err[i])) << "\" y1=\"" << num(py(s.y[i])) << "\" x2=\""
                   << num(px(s.x[i] + s.x_err[i])) << "\" y2=\"" << num(py(s.y[i])) << "\" stroke=\"" << colour
                   << "\"/>\n";
            }
            if (s.style == Style::Scatter || s.style == Style::LineMarkers) {
                os << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"3\" fill=\""
                   << colour << "\"/>\n";
            }
        }
        const double ly = top + 14.0 + 18.0 * static_cast<double>(si);
        os << "<rect x=\"" << num(left + pw + 12) << "\" y=\"" << num(ly - 9) << "\" width=\"12\" height=\"12\" fill=\""
           << colour << "\"/><text x=\"" << num(left + pw + 30) << "\" y=\"" << num(ly + 1) << "\">"
           << escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace rnet::svg
