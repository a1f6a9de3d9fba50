#include "fcvae/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <sstream>

#include "fcvae/errors.hpp"

namespace fcvae {

namespace {

constexpr int kMargin = 40;

std::string escape(const std::string& text) {
    std::string out;
    for (char ch : text) {
        switch (ch) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

struct Panel {
    double top = 0.0;
    double height = 0.0;
    double lo = 0.0;
    double hi = 1.0;

    double y(double v) const {
        const double span = hi - lo > 0.0 ? hi - lo : 1.0;
        return top + height - (v - lo) / span * height;
    }
};

// Gaps (undefined points) break the polyline into separate subpaths.
std::string trace_path(const std::vector<std::optional<double>>& ys, const Panel& panel, double x0, double dx) {
    std::string d;
    bool pen_down = false;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        if (!ys[i] || !std::isfinite(*ys[i])) {
            pen_down = false;
            continue;
        }
        d += fmt::format("{}{:.2f},{:.2f} ", pen_down ? 'L' : 'M', x0 + dx * static_cast<double>(i), panel.y(*ys[i]));
        pen_down = true;
    }
    return d;
}

Panel fit_panel(const std::vector<std::optional<double>>& ys, double top, double height,
                std::optional<double> extra = std::nullopt) {
    Panel p{top, height, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& v : ys) {
        if (v && std::isfinite(*v)) {
            p.lo = std::min(p.lo, *v);
            p.hi = std::max(p.hi, *v);
        }
    }
    if (extra) {
        p.lo = std::min(p.lo, *extra);
        p.hi = std::max(p.hi, *extra);
    }
    if (!std::isfinite(p.lo)) {
        p.lo = 0.0;
        p.hi = 1.0;
    }
    const double pad = 0.05 * (p.hi - p.lo > 0.0 ? p.hi - p.lo : 1.0);
    p.lo -= pad;
    p.hi += pad;
    return p;
}

}  // namespace

std::string render_svg(const ScoreSeries& scores, const std::vector<double>* values, const PlotOptions& options) {
    const std::size_t n = scores.size();
    if (n == 0) throw DataError("cannot plot an empty score series");
    if (values && values->size() != n) {
        throw DataError(fmt::format("value series has {} points but scores have {}", values->size(), n));
    }
    if (options.width <= 2 * kMargin || options.panel_height <= kMargin) {
        throw ConfigError("width", "plot dimensions too small");
    }

    const int panels = values ? 2 : 1;
    const int height = panels * options.panel_height + kMargin;
    const double x0 = kMargin;
    const double plot_w = options.width - 2 * kMargin;
    const double dx = n > 1 ? plot_w / static_cast<double>(n - 1) : 0.0;
    const double inner = options.panel_height - kMargin;

    std::ostringstream svg;
    svg << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">)",
                       options.width, height, options.width, height)
        << '\n';
    svg << fmt::format(R"(<rect x="0" y="0" width="{}" height="{}" fill="white"/>)", options.width, height) << '\n';
    const std::string title = options.title.empty() ? scores.curve_id : options.title;
    svg << fmt::format(R"(<text x="{}" y="20" font-family="sans-serif" font-size="14">{}</text>)", kMargin,
                       escape(title))
        << '\n';

    // Shade labelled runs across every panel.
    for (std::size_t i = 0; i < n;) {
        if (i >= scores.labels.size() || scores.labels[i] != 1) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && j < scores.labels.size() && scores.labels[j] == 1) ++j;
        const double left = x0 + dx * static_cast<double>(i) - std::max(dx / 2.0, 0.5);
        const double right = x0 + dx * static_cast<double>(j - 1) + std::max(dx / 2.0, 0.5);
        svg << fmt::format(R"(<rect class="anomaly" x="{:.2f}" y="{}" width="{:.2f}" height="{}" fill="#f4a6a6" fill-opacity="0.5"/>)",
                           left, kMargin, right - left, height - kMargin)
            << '\n';
        i = j;
    }

    double top = kMargin;
    if (values) {
        std::vector<std::optional<double>> ys(values->begin(), values->end());
        const Panel panel = fit_panel(ys, top, inner);
        svg << fmt::format(R"(<path class="value" d="{}" fill="none" stroke="#1f77b4" stroke-width="1"/>)",
                           trace_path(ys, panel, x0, dx))
            << '\n';
        svg << fmt::format(R"(<text x="{}" y="{:.0f}" font-family="sans-serif" font-size="11">value</text>)",
                           kMargin + 4, top + 12)
            << '\n';
        top += options.panel_height;
    }

    const Panel panel = fit_panel(scores.scores, top, inner, options.threshold);
    svg << fmt::format(R"(<path class="score" d="{}" fill="none" stroke="#2ca02c" stroke-width="1"/>)",
                       trace_path(scores.scores, panel, x0, dx))
        << '\n';
    svg << fmt::format(R"(<text x="{}" y="{:.0f}" font-family="sans-serif" font-size="11">score</text>)", kMargin + 4,
                       top + 12)
        << '\n';
    if (options.threshold) {
        const double y = panel.y(*options.threshold);
        svg << fmt::format(R"(<path class="threshold" d="M{:.2f},{:.2f} L{:.2f},{:.2f}" stroke="#d62728" stroke-dasharray="4 3" fill="none"/>)",
                           x0, y, x0 + plot_w, y)
            << '\n';
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace fcvae
