#include "fcvae/evaluator.hpp"

#include <algorithm>
#include <json.hpp>
#include <limits>

#include "fcvae/errors.hpp"

namespace fcvae {

namespace {

void require_same_length(std::span<const int> pred, std::span<const int> labels) {
    if (pred.size() != labels.size())
        throw UsageError("prediction length " + std::to_string(pred.size()) + " differs from label length " +
                         std::to_string(labels.size()));
}

template <class F>
void for_each_segment(std::span<const int> labels, F f) {
    std::size_t i = 0;
    while (i < labels.size()) {
        if (labels[i] != 1) {
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end + 1 < labels.size() && labels[end + 1] == 1) ++end;
        f(i, end);
        i = end + 1;
    }
}

/// A labelled segment reduced to what the threshold sweep needs.
struct Segment {
    double detection = -std::numeric_limits<double>::infinity();  // best score inside the credit window
    std::size_t size = 0;                                          // defined points it covers
};

}  // namespace

std::vector<int> point_adjust(std::span<const int> pred, std::span<const int> labels) {
    require_same_length(pred, labels);
    std::vector<int> out(pred.begin(), pred.end());
    for_each_segment(labels, [&](std::size_t s, std::size_t e) {
        const bool hit = std::any_of(pred.begin() + static_cast<std::ptrdiff_t>(s),
                                     pred.begin() + static_cast<std::ptrdiff_t>(e + 1), [](int p) { return p == 1; });
        if (hit) std::fill(out.begin() + static_cast<std::ptrdiff_t>(s), out.begin() + static_cast<std::ptrdiff_t>(e + 1), 1);
    });
    return out;
}

std::vector<int> delay_point_adjust(std::span<const int> pred, std::span<const int> labels, std::size_t delay) {
    require_same_length(pred, labels);
    std::vector<int> out(pred.begin(), pred.end());
    for_each_segment(labels, [&](std::size_t s, std::size_t e) {
        const std::size_t last = std::min(e, s + delay);
        const bool hit = std::any_of(pred.begin() + static_cast<std::ptrdiff_t>(s),
                                     pred.begin() + static_cast<std::ptrdiff_t>(last + 1), [](int p) { return p == 1; });
        std::fill(out.begin() + static_cast<std::ptrdiff_t>(s), out.begin() + static_cast<std::ptrdiff_t>(e + 1),
                  hit ? 1 : 0);
    });
    return out;
}

Prf prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    Prf r;
    if (tp + fp == 0) {
        r.precision = (tp + fn == 0) ? 1.0 : 0.0;
    } else {
        r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    r.recall = (tp + fn == 0) ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    r.f1 = (r.precision + r.recall == 0.0) ? 0.0 : 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

Prf prf(std::span<const int> pred, std::span<const int> labels) {
    require_same_length(pred, labels);
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == 1 && labels[i] == 1) ++tp;
        else if (pred[i] == 1) ++fp;
        else if (labels[i] == 1) ++fn;
    }
    return prf_from_counts(tp, fp, fn);
}

EvalResult best_f1(const ScoreSeries& scores, std::optional<std::size_t> delay) {
    return best_f1(std::span(&scores, 1), delay);
}

EvalResult best_f1(std::span<const ScoreSeries> series, std::optional<std::size_t> delay) {
    // Under either adjustment a segment is all-positive exactly when its best
    // score in the credit window reaches the threshold, so each threshold's
    // counts follow from sorted segment detections and sorted normal scores.
    std::vector<Segment> segments;
    std::vector<double> normal_scores;
    std::vector<double> candidates;
    for (const auto& s : series) {
        if (s.labels.size() != s.scores.size()) throw UsageError(s.curve_id + ": labels and scores differ in length");
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!s.scores[i]) continue;
            candidates.push_back(*s.scores[i]);
            if (s.labels[i] != 1) normal_scores.push_back(*s.scores[i]);
        }
        for_each_segment(s.labels, [&](std::size_t b, std::size_t e) {
            Segment seg;
            const std::size_t credit_end = delay ? std::min(e, b + *delay) : e;
            for (std::size_t i = b; i <= e; ++i) {
                if (!s.scores[i]) continue;
                ++seg.size;
                if (i <= credit_end) seg.detection = std::max(seg.detection, *s.scores[i]);
            }
            segments.push_back(seg);
        });
    }
    if (candidates.empty()) throw UsageError("best_f1 needs at least one defined score");

    std::sort(candidates.begin(), candidates.end(), std::greater<>());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::size_t positives = 0;
    for (const auto& seg : segments) positives += seg.size;
    EvalResult best;
    best.delay = delay;
    best.threshold = candidates.front();
    if (positives == 0) return best;  // no positive class: P = R = F1 = 0 by convention

    std::sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) { return a.detection > b.detection; });
    std::sort(normal_scores.begin(), normal_scores.end(), std::greater<>());

    std::size_t tp = 0, fp = 0, si = 0, ni = 0;
    bool first = true;
    for (const double t : candidates) {
        while (si < segments.size() && segments[si].detection >= t) tp += segments[si++].size;
        while (ni < normal_scores.size() && normal_scores[ni] >= t) {
            ++fp;
            ++ni;
        }
        const auto r = prf_from_counts(tp, fp, positives - tp);
        if (first || r.f1 > best.f1) {
            best.precision = r.precision;
            best.recall = r.recall;
            best.f1 = r.f1;
            best.threshold = t;
            first = false;
        }
    }
    return best;
}

std::string evaluation_report(std::span<const ScoreSeries> scores, std::size_t delay, bool per_curve) {
    using nlohmann::json;
    auto entry = [delay](std::span<const ScoreSeries> s) {
        const auto plain = best_f1(s, std::nullopt);
        const auto delayed = best_f1(s, delay);
        return json{{"best_f1", {{"p", plain.precision}, {"r", plain.recall}, {"f1", plain.f1}, {"threshold", plain.threshold}}},
                    {"delay_f1",
                     {{"p", delayed.precision},
                      {"r", delayed.recall},
                      {"f1", delayed.f1},
                      {"threshold", delayed.threshold},
                      {"delay", delay}}}};
    };
    json doc;
    doc["dataset"] = entry(scores);
    if (per_curve) {
        json curves = json::object();
        for (const auto& s : scores) {
            if (s.defined_count() > 0) curves[s.curve_id] = entry(std::span(&s, 1));
        }
        doc["curves"] = std::move(curves);
    }
    return doc.dump(2) + "\n";
}

}  // namespace fcvae
