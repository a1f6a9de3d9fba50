#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fcvae/detector.hpp"

namespace fcvae {

struct PlotOptions {
    int width = 1200;
    int panel_height = 220;
    std::optional<double> threshold;
    std::string title;
};

/// Two stacked panels: values (if given) and scores, with labelled anomaly
/// runs shaded and an optional horizontal threshold on the score panel.
std::string render_svg(const ScoreSeries& scores, const std::vector<double>* values, const PlotOptions& options);

}  // namespace fcvae
