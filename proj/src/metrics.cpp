#include "dilate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "dilate/dp_kernels.hpp"
#include "dilate/losses.hpp"

namespace dilate {

namespace {

double sample_mean(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) {
        acc += x;
    }
    return acc / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
    if (v.size() < 2) {
        return 0.0;
    }
    double acc = 0.0;
    for (double x : v) {
        const double d = x - mean;
        acc += d * d;
    }
    return acc / static_cast<double>(v.size() - 1);
}

} // namespace

double eval_mse(const TimeSeries& pred, const TimeSeries& target) {
    validate_series(pred);
    validate_series(target);
    if (pred.dims() != target.dims() || pred.steps() != target.steps()) {
        throw std::invalid_argument("eval_mse: shape mismatch");
    }
    double acc = 0.0;
    const auto& pv = pred.values.values();
    const auto& tv = target.values.values();
    for (std::size_t i = 0; i < pv.size(); ++i) {
        const double d = pv[i] - tv[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pv.size());
}

double eval_dtw(const TimeSeries& pred, const TimeSeries& target) {
    return hard_dtw(pairwise_cost(pred, target, 1.0)).value;
}

double eval_tdi(const TimeSeries& pred, const TimeSeries& target) {
    const HardDtwResult res = hard_dtw(pairwise_cost(pred, target, 1.0));
    const PenaltyMatrix omega = squared_penalty(pred.steps());
    double acc = 0.0;
    for (const auto& [h, j] : res.path.cells) {
        acc += omega.omega(h, j);
    }
    return acc;
}

ChangePointSet detect_change_points(const TimeSeries& series) {
    if (series.dims() != 1) {
        throw std::invalid_argument("detect_change_points: univariate series required");
    }
    const std::size_t k = series.steps();
    if (k < 2) {
        return {};
    }
    // Center the series: detection is translation-invariant and the prefix
    // sums lose far less precision around zero.
    std::vector<double> x(series.values.row(0).begin(), series.values.row(0).end());
    const double xmean = sample_mean(x);
    for (double& v : x) {
        v -= xmean;
    }

    // Noise scale from first differences: Var(diff) = 2 sigma^2 for iid noise.
    std::vector<double> diffs(k - 1);
    for (std::size_t i = 0; i + 1 < k; ++i) {
        diffs[i] = x[i + 1] - x[i];
    }
    const double dmean = sample_mean(diffs);
    const double sigma2 = sample_variance(diffs, dmean) / 2.0;

    // Prefix sums give O(1) piecewise-constant L2 segment costs.
    std::vector<double> s1(k + 1, 0.0);
    std::vector<double> s2(k + 1, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        s1[i + 1] = s1[i] + x[i];
        s2[i + 1] = s2[i] + x[i] * x[i];
    }
    // Floor the penalty so rounding noise in the segment costs can never
    // look like a genuine cost reduction on a degenerate (constant) series.
    const double beta = std::max(2.0 * sigma2 * std::log(static_cast<double>(k)),
                                 1e-12 * std::max(1.0, s2[k]));
    auto segment_cost = [&](std::size_t a, std::size_t b) { // samples [a, b)
        const double n = static_cast<double>(b - a);
        const double sum = s1[b] - s1[a];
        return (s2[b] - s2[a]) - sum * sum / n;
    };

    // Optimal partitioning; ties keep the smallest split point so a flat
    // series collapses to a single segment.
    std::vector<double> f(k + 1, 0.0);
    std::vector<std::size_t> back(k + 1, 0);
    f[0] = -beta;
    for (std::size_t t = 1; t <= k; ++t) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_s = 0;
        for (std::size_t s = 0; s < t; ++s) {
            const double cand = f[s] + segment_cost(s, t) + beta;
            if (cand < best) {
                best = cand;
                best_s = s;
            }
        }
        f[t] = best;
        back[t] = best_s;
    }

    ChangePointSet out;
    std::size_t t = k;
    while (t > 0) {
        const std::size_t s = back[t];
        if (s > 0) {
            out.indices.push_back(s + 1); // 1-based first sample of the new segment
        }
        t = s;
    }
    std::sort(out.indices.begin(), out.indices.end());
    return out;
}

double hausdorff(const ChangePointSet& a, const ChangePointSet& b,
                 std::size_t horizon) {
    if (a.indices.empty() && b.indices.empty()) {
        return 0.0;
    }
    if (a.indices.empty() || b.indices.empty()) {
        return static_cast<double>(horizon);
    }
    auto directed = [](const std::vector<std::size_t>& u, const std::vector<std::size_t>& v) {
        double worst = 0.0;
        for (std::size_t t : u) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t s : v) {
                const double d = t > s ? static_cast<double>(t - s) : static_cast<double>(s - t);
                best = std::min(best, d);
            }
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(a.indices, b.indices), directed(b.indices, a.indices));
}

namespace {

// Swinging-door compression: greedily extend a segment from the current
// anchor while a single slope can pass within eps of every covered sample;
// close at the previous sample once the slope corridor collapses. Returns
// the polyline vertices as (sample index, value).
std::vector<std::pair<std::size_t, double>> swing_door(std::span<const double> x,
                                                       double eps) {
    std::vector<std::pair<std::size_t, double>> vertices;
    vertices.emplace_back(0, x[0]);
    std::size_t anchor = 0;
    double slope_hi = std::numeric_limits<double>::infinity();
    double slope_lo = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double dt = static_cast<double>(i - anchor);
        const double hi = (x[i] - x[anchor] + eps) / dt;
        const double lo = (x[i] - x[anchor] - eps) / dt;
        slope_hi = std::min(slope_hi, hi);
        slope_lo = std::max(slope_lo, lo);
        if (slope_lo > slope_hi) {
            vertices.emplace_back(i - 1, x[i - 1]);
            anchor = i - 1;
            const double dt2 = static_cast<double>(i - anchor);
            slope_hi = (x[i] - x[anchor] + eps) / dt2;
            slope_lo = (x[i] - x[anchor] - eps) / dt2;
        }
    }
    if (vertices.back().first != x.size() - 1) {
        vertices.emplace_back(x.size() - 1, x[x.size() - 1]);
    }
    return vertices;
}

// Per-unit-interval slopes of the compressed polyline.
std::vector<double> compressed_slopes(std::span<const double> x, double eps) {
    const auto vertices = swing_door(x, eps);
    std::vector<double> slopes(x.size() - 1, 0.0);
    for (std::size_t v = 0; v + 1 < vertices.size(); ++v) {
        const auto [t0, x0] = vertices[v];
        const auto [t1, x1] = vertices[v + 1];
        const double slope = (x1 - x0) / static_cast<double>(t1 - t0);
        for (std::size_t t = t0; t < t1; ++t) {
            slopes[t] = slope;
        }
    }
    return slopes;
}

} // namespace

double ramp_score(const TimeSeries& pred, const TimeSeries& target) {
    validate_series(pred);
    validate_series(target);
    if (pred.dims() != 1 || target.dims() != 1) {
        throw std::invalid_argument("ramp_score: univariate series required");
    }
    if (pred.steps() != target.steps()) {
        throw std::invalid_argument("ramp_score: shape mismatch");
    }
    const std::size_t k = target.steps();
    if (k < 2) {
        throw std::invalid_argument("ramp_score: need at least two time steps");
    }
    const auto t = target.values.row(0);
    const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
    const double eps = 0.03 * (*hi - *lo);

    const std::vector<double> sp = compressed_slopes(pred.values.row(0), eps);
    const std::vector<double> st = compressed_slopes(t, eps);
    double acc = 0.0;
    for (std::size_t i = 0; i < sp.size(); ++i) {
        acc += std::abs(sp[i] - st[i]);
    }
    return acc / static_cast<double>(sp.size());
}

WelchResult welch_t_test(std::span<const double> runs_a,
                         std::span<const double> runs_b) {
    if (runs_a.size() < 2 || runs_b.size() < 2) {
        throw std::invalid_argument("welch_t_test: need at least 2 runs per side");
    }
    const double na = static_cast<double>(runs_a.size());
    const double nb = static_cast<double>(runs_b.size());
    const double ma = sample_mean(runs_a);
    const double mb = sample_mean(runs_b);
    const double va = sample_variance(runs_a, ma);
    const double vb = sample_variance(runs_b, mb);

    WelchResult out;
    const double sea = va / na;
    const double seb = vb / nb;
    const double se2 = sea + seb;
    if (se2 == 0.0) {
        // Degenerate samples: only a mean difference can be significant.
        out.t = ma == mb ? 0.0 : std::numeric_limits<double>::infinity();
        out.dof = na + nb - 2.0;
        out.p = ma == mb ? 1.0 : 0.0;
        out.significant = ma != mb;
        return out;
    }
    out.t = (ma - mb) / std::sqrt(se2);
    out.dof = se2 * se2 / (sea * sea / (na - 1.0) + seb * seb / (nb - 1.0));
    const boost::math::students_t dist(out.dof);
    out.p = 2.0 * boost::math::cdf(dist, -std::abs(out.t));
    out.significant = out.p < 0.05;
    return out;
}

double metric_value(const RunMetrics& m, const std::string& name) {
    if (name == "mse") return m.mse;
    if (name == "dtw") return m.dtw;
    if (name == "tdi") return m.tdi;
    if (name == "ramp") return m.ramp;
    if (name == "hausdorff") return m.hausdorff;
    throw std::invalid_argument("unknown metric: " + name);
}

MetricsReport aggregate_runs(const std::vector<RunMetrics>& runs) {
    if (runs.empty()) {
        throw std::invalid_argument("aggregate_runs: no runs to aggregate");
    }
    MetricsReport report;
    report.runs = runs.size();
    for (const auto& name : metric_names()) {
        MetricSummary s;
        s.per_run.reserve(runs.size());
        for (const auto& r : runs) {
            s.per_run.push_back(metric_value(r, name));
        }
        s.mean = sample_mean(s.per_run);
        s.stddev = std::sqrt(sample_variance(s.per_run, s.mean));
        report.metrics.emplace(name, std::move(s));
    }
    return report;
}

} // namespace dilate
