#pragma once

#include <cstddef>
#include <functional>

#include "dilate/dp_kernels.hpp"
#include "dilate/matrix.hpp"

namespace dilate {

enum class PenaltyKind {
    squared,     ///< omega(h, j) = (h - j)^2 / k^2
    sakoe_chiba, ///< omega(h, j) = +inf if |h - j| > band, else 0
    weighted,    ///< omega(h, j) = f(|h - j|), f nondecreasing with f(0) = 0
};

/// Temporal misalignment penalty on alignment cells.
struct PenaltyMatrix {
    Matrix omega; ///< k x k
    PenaltyKind kind = PenaltyKind::squared;

    std::size_t k() const { return omega.rows(); }
};

PenaltyMatrix squared_penalty(std::size_t k);
PenaltyMatrix sakoe_chiba_penalty(std::size_t k, std::size_t band_width);
/// Linear default f(m) = m / k.
PenaltyMatrix weighted_penalty(std::size_t k);
PenaltyMatrix weighted_penalty(std::size_t k,
                               const std::function<double(std::size_t)>& f);

struct LossConfig {
    double alpha = 0.5;  ///< balance between shape and temporal terms, in [0, 1]
    double gamma = 1e-2; ///< softmin temperature
    PenaltyKind omega_kind = PenaltyKind::squared;
    std::size_t band_width = 1; ///< sakoe_chiba only
};

/// Value and prediction-space gradient of one loss evaluation.
struct LossResult {
    double value = 0.0;
    Matrix grad; ///< d x k, d value / d prediction
    double shape_part = 0.0;
    double temporal_part = 0.0;
};

/// Smoothed-DTW shape term. grad(:, h) = sum_j A(h, j) * 2 (pred(:, h) - target(:, j)).
LossResult shape_loss(const TimeSeries& pred, const TimeSeries& target,
                      double gamma);

/// Smoothed temporal term <alignment, omega>; its gradient runs the Hessian
/// product of the DTW value through the cost chain rule. Banded penalties
/// are rejected here (only the tangled variant admits them).
LossResult temporal_loss(const TimeSeries& pred, const TimeSeries& target,
                         double gamma, const PenaltyMatrix& omega);

/// alpha * shape + (1 - alpha) * temporal, sharing a single forward/backward
/// DP pass between the two terms.
LossResult dilate_loss(const TimeSeries& pred, const TimeSeries& target,
                       const LossConfig& config);

/// Tangled variant: smoothed DTW on the blended cost
/// alpha * delta + (1 - alpha) * omega. Banded penalties are admitted; the
/// blended cost of an out-of-band cell is the infinity sentinel. omega is
/// constant in the prediction, so the gradient is alpha times the alignment
/// chained through delta.
LossResult dilate_tangled_loss(const TimeSeries& pred, const TimeSeries& target,
                               const LossConfig& config,
                               const PenaltyMatrix& omega);

/// Mean squared error over all d*k entries.
LossResult mse_loss(const TimeSeries& pred, const TimeSeries& target);

} // namespace dilate
