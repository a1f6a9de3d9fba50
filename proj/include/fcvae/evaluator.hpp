#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcvae/detector.hpp"

namespace fcvae {

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvalResult {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double threshold = 0.0;
    std::optional<std::size_t> delay;
};

/// Detecting any point of a labelled segment credits the whole segment.
std::vector<int> point_adjust(std::span<const int> pred, std::span<const int> labels);

/// A segment is credited only if it is detected within its first `delay`+1
/// points; otherwise every prediction in it is cleared.
std::vector<int> delay_point_adjust(std::span<const int> pred, std::span<const int> labels, std::size_t delay);

/// Pointwise precision/recall/F1. No predicted positives gives P = 0 unless
/// there are no true anomalies either (then 1); no true anomalies gives R = 1.
Prf prf(std::span<const int> pred, std::span<const int> labels);
Prf prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

/// Best F1 over every distinct defined score used as threshold (score >= t is
/// positive), after point adjustment or, with `delay`, delayed adjustment.
/// Undefined scores are predicted normal and left out of the counts. Ties go
/// to the larger threshold. Multiple series are pooled under one threshold.
EvalResult best_f1(const ScoreSeries& scores, std::optional<std::size_t> delay);
EvalResult best_f1(std::span<const ScoreSeries> scores, std::optional<std::size_t> delay);

/// Report JSON with pooled results and, when `per_curve`, one entry per curve.
std::string evaluation_report(std::span<const ScoreSeries> scores, std::size_t delay, bool per_curve = true);

}  // namespace fcvae
