#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dilate/matrix.hpp"

namespace dilate {

/// Mean squared error over all d*k entries.
double eval_mse(const TimeSeries& pred, const TimeSeries& target);

/// Hard (unsmoothed) DTW value on the squared Euclidean cost.
double eval_dtw(const TimeSeries& pred, const TimeSeries& target);

/// Time distortion index: <optimal hard path, squared penalty>, with the
/// deterministic diagonal > vertical > horizontal tie-break. Zero exactly
/// when the optimal path is the main diagonal.
double eval_tdi(const TimeSeries& pred, const TimeSeries& target);

/// Detected change points as 1-based time indices: each index is the first
/// sample of a new segment.
struct ChangePointSet {
    std::vector<std::size_t> indices; ///< strictly increasing, possibly empty
};

/// Penalized optimal partitioning with piecewise-constant L2 segment cost.
/// Penalty beta = 2 * sigma2 * log(k) where sigma2 is half the variance of
/// the first differences. Requires d = 1; returns an empty set for k < 2.
ChangePointSet detect_change_points(const TimeSeries& series);

/// Symmetric max of directed min distances between change-point sets.
/// By convention: both sets empty -> 0; exactly one empty -> horizon.
double hausdorff(const ChangePointSet& a, const ChangePointSet& b,
                 std::size_t horizon);

/// Mean absolute difference between the slope sequences of the two series
/// after swinging-door compression with tolerance 0.03 * (max - min) of the
/// target, sampled on the unit time grid. Requires d = 1 and k >= 2.
double ramp_score(const TimeSeries& pred, const TimeSeries& target);

struct WelchResult {
    double t = 0.0;
    double dof = 0.0;
    double p = 1.0;
    bool significant = false; ///< two-sided, level 0.05
};

/// Welch two-sample t-test with Welch-Satterthwaite degrees of freedom.
/// Requires at least two runs per side.
WelchResult welch_t_test(std::span<const double> runs_a,
                         std::span<const double> runs_b);

/// One run's metric values on a test split (per-sample means).
struct RunMetrics {
    double mse = 0.0;
    double dtw = 0.0;
    double tdi = 0.0;
    double ramp = 0.0;
    double hausdorff = 0.0;
};

inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{"mse", "dtw", "tdi", "ramp", "hausdorff"};
    return names;
}

double metric_value(const RunMetrics& m, const std::string& name);

struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0; ///< sample std over runs; 0 for a single run
    std::vector<double> per_run;
};

/// Aggregated per-metric values of a set of runs, plus significance flags
/// when two loss configurations were compared.
struct MetricsReport {
    std::size_t runs = 0;
    std::map<std::string, MetricSummary> metrics;
    std::map<std::string, WelchResult> significance; ///< empty unless comparing
};

MetricsReport aggregate_runs(const std::vector<RunMetrics>& runs);

} // namespace dilate
