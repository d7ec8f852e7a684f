#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "dilate/matrix.hpp"

namespace dilate {

/// Finite stand-in for the +inf cost of boundary and banned cells. Kept
/// finite so log-sum-exp arithmetic never produces NaN; softmin and both
/// recursions treat anything >= inf_cost_threshold as infinite.
inline constexpr double inf_cost = 1e30;
inline constexpr double inf_cost_threshold = 1e29;

inline bool is_inf_cost(double v) { return v >= inf_cost_threshold; }

/// Pairwise dissimilarity between prediction steps and target steps, plus
/// the smoothing parameter used by every soft recursion on it.
struct CostMatrix {
    Matrix delta;       ///< k x k, delta(h, j) = sum_d (pred(d,h) - target(d,j))^2
    double gamma = 1.0; ///< softmin temperature, > 0

    std::size_t k() const { return delta.rows(); }
};

/// Squared Euclidean cost summed over dimensions. Both series must share
/// d and k. Throws std::invalid_argument on shape mismatch or gamma <= 0.
CostMatrix pairwise_cost(const TimeSeries& pred, const TimeSeries& target,
                         double gamma);

/// Smoothed minimum -gamma * log(sum_i exp(-a_i / gamma)), computed with a
/// max-shifted log-sum-exp. Entries at or above the infinity sentinel are
/// skipped; if every entry is the sentinel the sentinel is returned.
/// The result lies in [min(values) - gamma * log(n), min(values)].
double softmin(std::span<const double> values, double gamma);

/// Dynamic-programming workspace shared by the soft-DTW passes. Tables are
/// (k+2) x (k+2): the forward recursion uses rows/cols 0..k (r(0,0) = 0,
/// infinite elsewhere on the border); the reverse occupancy recursion uses
/// the extra row/col k+1 as its virtual boundary. r_dot / e_dot hold
/// directional derivatives and are only populated by a JVP pass.
struct DpTables {
    Matrix r;     ///< accumulated soft cost
    Matrix e;     ///< path occupancy; interior cells are the soft alignment
    Matrix r_dot; ///< d r / dt along a cost-space direction
    Matrix e_dot; ///< d e / dt along a cost-space direction
    double gamma = 0.0;
    std::size_t k = 0;
    bool has_occupancy = false;
};

struct SoftDtwResult {
    double value = 0.0;
    DpTables tables;
};

/// Smoothed DTW value: r(i,j) = delta(i,j) + softmin(r(i-1,j-1), r(i-1,j),
/// r(i,j-1)) with r(k,k) as the result. Cells whose cost is the infinity
/// sentinel stay pinned at the sentinel. O(k^2).
SoftDtwResult soft_dtw_forward(const CostMatrix& cost);

/// Soft path-occupancy weights in [0,1]; the Gibbs expectation of warping
/// paths. Both corner entries equal 1.
struct SoftAlignment {
    Matrix weights; ///< k x k
};

/// Gradient of the smoothed DTW value with respect to the cost matrix,
/// obtained by the reverse occupancy recursion over the forward table
/// (transition weights exp((r(child) - r(parent) - delta(child)) / gamma));
/// the forward pass is never re-run. Fills tables.e and returns its
/// interior. Throws std::invalid_argument if the tables do not belong to
/// this cost matrix. O(k^2).
SoftAlignment soft_dtw_grad(const CostMatrix& cost, DpTables& tables);

/// Directional derivative of the gradient map delta -> alignment(delta)
/// along `direction`; equivalently the Hessian of the smoothed DTW value
/// applied to `direction`, and the gradient of <alignment(delta), direction>
/// with respect to delta. Computed by forward-mode differentiation of both
/// recursions (r_dot, then e_dot) in O(k^2). Direction entries must be
/// finite and below the infinity sentinel.
Matrix soft_dtw_grad_jvp(const CostMatrix& cost, const Matrix& direction,
                         DpTables& tables);

/// Convenience overload that runs the forward and occupancy passes itself.
Matrix soft_dtw_grad_jvp(const CostMatrix& cost, const Matrix& direction);

/// A hard warping path: (row, col) cells from (0,0) to (k-1,k-1), each step
/// moving right, down, or diagonally.
struct HardPath {
    std::vector<std::pair<std::size_t, std::size_t>> cells;
};

struct HardDtwResult {
    double value = 0.0;
    HardPath path;
};

/// Classic min-cost DTW with path recovery. Backtracking breaks ties in the
/// order diagonal, then vertical (row step), then horizontal (column step),
/// so the recovered path is deterministic. cost.gamma is ignored.
HardDtwResult hard_dtw(const CostMatrix& cost);

} // namespace dilate
