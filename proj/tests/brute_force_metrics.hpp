#pragma once

// Exhaustive best-F1 written directly from the adjustment rules: for every
// candidate threshold, predict, adjust each labelled run, count, and keep the
// best. No sorting tricks, no shared code with the library.

#include <optional>
#include <set>
#include <vector>

#include "fcvae/detector.hpp"

namespace fcvae::testing {

struct BruteResult {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double threshold = 0.0;
};

inline std::vector<int> brute_adjust(const std::vector<int>& pred, const std::vector<int>& labels,
                                     std::optional<std::size_t> delay) {
    std::vector<int> out = pred;
    std::size_t i = 0;
    const std::size_t n = labels.size();
    while (i < n) {
        if (labels[i] == 0) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && labels[j] == 1) ++j;  // run is [i, j)
        bool detected = false;
        for (std::size_t k = i; k < j; ++k) {
            const bool in_time = !delay || k - i <= *delay;
            if (pred[k] == 1 && in_time) detected = true;
        }
        for (std::size_t k = i; k < j; ++k) out[k] = detected ? 1 : (delay ? 0 : pred[k]);
        i = j;
    }
    return out;
}

inline BruteResult brute_best_f1(const std::vector<ScoreSeries>& series, std::optional<std::size_t> delay) {
    std::set<double> thresholds;
    bool any_positive = false;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.scores.size(); ++i) {
            if (s.scores[i]) {
                thresholds.insert(*s.scores[i]);
                if (s.labels[i] == 1) any_positive = true;
            }
        }
    }
    BruteResult best;
    best.threshold = *thresholds.rbegin();
    if (!any_positive) return best;
    bool first = true;
    for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it) {
        const double t = *it;
        long tp = 0, fp = 0, fn = 0;
        for (const auto& s : series) {
            std::vector<int> pred(s.scores.size());
            for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = (s.scores[i] && *s.scores[i] >= t) ? 1 : 0;
            const auto adj = brute_adjust(pred, s.labels, delay);
            for (std::size_t i = 0; i < adj.size(); ++i) {
                if (!s.scores[i]) continue;
                tp += adj[i] == 1 && s.labels[i] == 1;
                fp += adj[i] == 1 && s.labels[i] == 0;
                fn += adj[i] == 0 && s.labels[i] == 1;
            }
        }
        const double p = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
        const double f1 = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
        if (first || f1 > best.f1) {
            best = {p, r, f1, t};
            first = false;
        }
    }
    return best;
}

}  // namespace fcvae::testing
