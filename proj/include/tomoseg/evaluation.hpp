#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <tuple>
#include <vector>

#include "tomoseg/assembly.hpp"
#include "tomoseg/errors.hpp"

namespace tomoseg::evaluation {

/// Expert mark: a cell centre, optionally with a radius.
struct Annotation {
    double x = 0.0;
    double y = 0.0;
    std::optional<double> r;
};

struct GroundTruth {
    std::vector<std::vector<Annotation>> slices;

    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& s : slices) n += s.size();
        return n;
    }
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct SliceMatch {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (detection, annotation)
    std::size_t detections = 0;
    std::size_t annotations = 0;

    std::size_t tp() const { return pairs.size(); }
    std::size_t fp() const { return detections - pairs.size(); }
    std::size_t fn() const { return annotations - pairs.size(); }
};

struct Matching {
    std::vector<SliceMatch> slices;
};

/// Greedy one-to-one matching: candidate pairs within tol are taken in order
/// of increasing distance (ties by detection then annotation index).
inline SliceMatch match_points(const std::vector<Point>& detected, const std::vector<Annotation>& truth, double tol) {
    if (!(tol > 0.0)) throw ParameterError("match_detections: tol must be > 0");
    std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
    for (std::size_t i = 0; i < detected.size(); ++i)
        for (std::size_t j = 0; j < truth.size(); ++j) {
            const double d = std::hypot(detected[i].x - truth[j].x, detected[i].y - truth[j].y);
            if (d <= tol) candidates.emplace_back(d, i, j);
        }
    std::sort(candidates.begin(), candidates.end());
    SliceMatch m;
    m.detections = detected.size();
    m.annotations = truth.size();
    std::vector<bool> det_used(detected.size(), false);
    std::vector<bool> gt_used(truth.size(), false);
    for (const auto& [d, i, j] : candidates) {
        if (det_used[i] || gt_used[j]) continue;
        det_used[i] = gt_used[j] = true;
        m.pairs.emplace_back(i, j);
    }
    return m;
}

/// Matches records against annotations slice by slice (records grouped by slice_idx).
inline Matching match_detections(const std::vector<assembly::CellRecord>& detected, const GroundTruth& truth,
                                 double tol) {
    Matching out;
    std::size_t slices = truth.slices.size();
    for (const auto& r : detected) {
        if (r.slice_idx < 0) throw ParameterError("match_detections: negative slice index");
        slices = std::max(slices, static_cast<std::size_t>(r.slice_idx) + 1);
    }
    std::vector<std::vector<Point>> points(slices);
    for (const auto& r : detected) points[r.slice_idx].push_back({r.cx, r.cy});
    static const std::vector<Annotation> none;
    for (std::size_t s = 0; s < slices; ++s)
        out.slices.push_back(match_points(points[s], s < truth.slices.size() ? truth.slices[s] : none, tol));
    return out;
}

struct SliceCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

/// Undefined ratios (empty denominators) stay empty rather than becoming 0.
struct EvalReport {
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    std::optional<double> recall;
    std::optional<double> precision;
    std::vector<SliceCounts> per_slice;

    std::optional<double> f_measure() const {
        if (!recall || !precision || *recall + *precision == 0.0) return std::nullopt;
        return 2.0 * *recall * *precision / (*recall + *precision);
    }
};

inline EvalReport score(std::size_t tp, std::size_t fp, std::size_t fn) {
    EvalReport r;
    r.true_positives = tp;
    r.false_positives = fp;
    r.false_negatives = fn;
    if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    return r;
}

inline EvalReport score(const Matching& matching) {
    std::size_t tp = 0, fp = 0, fn = 0;
    std::vector<SliceCounts> per;
    for (const auto& s : matching.slices) {
        per.push_back({s.tp(), s.fp(), s.fn()});
        tp += s.tp();
        fp += s.fp();
        fn += s.fn();
    }
    auto r = score(tp, fp, fn);
    r.per_slice = std::move(per);
    return r;
}

}  // namespace tomoseg::evaluation
