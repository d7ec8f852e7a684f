#include "dilate/dp_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dilate {

namespace {

void validate_cost(const CostMatrix& cost) {
    if (cost.delta.rows() == 0 || cost.delta.rows() != cost.delta.cols()) {
        throw std::invalid_argument("cost matrix must be square and non-empty");
    }
    if (!(cost.gamma > 0.0)) {
        throw std::invalid_argument("cost matrix gamma must be positive");
    }
    for (double v : cost.delta.values()) {
        if (std::isnan(v) || v < 0.0) {
            throw std::invalid_argument("cost matrix entries must be non-negative");
        }
    }
}

// Three-way softmin on the hot path. The minimum term contributes exp(0),
// so only the other two exponentials are evaluated.
inline double softmin3(double a, double b, double c, double gamma) {
    double lo = a < b ? a : b;
    if (c < lo) {
        lo = c;
    }
    if (is_inf_cost(lo)) {
        return inf_cost;
    }
    double acc = 0.0;
    acc += is_inf_cost(a) ? 0.0 : std::exp((lo - a) / gamma);
    acc += is_inf_cost(b) ? 0.0 : std::exp((lo - b) / gamma);
    acc += is_inf_cost(c) ? 0.0 : std::exp((lo - c) / gamma);
    return lo - gamma * std::log(acc);
}

void check_tables(const CostMatrix& cost, const DpTables& t, const char* who) {
    const std::size_t k = cost.k();
    if (t.k != k || t.r.rows() != k + 2 || t.gamma != cost.gamma) {
        throw std::invalid_argument(std::string(who) + ": tables do not match cost matrix");
    }
    // The forward recursion seeds r(1,1) = delta(1,1); anything else means
    // the tables were produced from a different cost matrix.
    const double d00 = cost.delta(0, 0);
    const double r11 = t.r(1, 1);
    const bool seed_ok = is_inf_cost(d00) ? is_inf_cost(r11) : r11 == d00;
    if (!seed_ok) {
        throw std::invalid_argument(std::string(who) + ": stale tables for this cost matrix");
    }
}

} // namespace

double softmin(std::span<const double> values, double gamma) {
    if (values.empty()) {
        throw std::invalid_argument("softmin: empty input");
    }
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("softmin: gamma must be positive");
    }
    double lo = inf_cost;
    for (double v : values) {
        if (!is_inf_cost(v) && v < lo) {
            lo = v;
        }
    }
    if (is_inf_cost(lo)) {
        return inf_cost;
    }
    double acc = 0.0;
    for (double v : values) {
        if (!is_inf_cost(v)) {
            acc += std::exp((lo - v) / gamma);
        }
    }
    return lo - gamma * std::log(acc);
}

CostMatrix pairwise_cost(const TimeSeries& pred, const TimeSeries& target,
                         double gamma) {
    validate_series(pred);
    validate_series(target);
    if (pred.dims() != target.dims() || pred.steps() != target.steps()) {
        throw std::invalid_argument("pairwise_cost: shape mismatch between prediction and target");
    }
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("pairwise_cost: gamma must be positive");
    }
    const std::size_t d = pred.dims();
    const std::size_t k = pred.steps();
    CostMatrix out{Matrix(k, k), gamma};
    for (std::size_t h = 0; h < k; ++h) {
        for (std::size_t j = 0; j < k; ++j) {
            double acc = 0.0;
            for (std::size_t dim = 0; dim < d; ++dim) {
                const double diff = pred.values(dim, h) - target.values(dim, j);
                acc += diff * diff;
            }
            out.delta(h, j) = acc;
        }
    }
    return out;
}

SoftDtwResult soft_dtw_forward(const CostMatrix& cost) {
    validate_cost(cost);
    const std::size_t k = cost.k();
    const double g = cost.gamma;

    SoftDtwResult out;
    out.tables.k = k;
    out.tables.gamma = g;
    out.tables.r = Matrix(k + 2, k + 2, inf_cost);
    Matrix& r = out.tables.r;
    r(0, 0) = 0.0;

    for (std::size_t i = 1; i <= k; ++i) {
        for (std::size_t j = 1; j <= k; ++j) {
            const double d = cost.delta(i - 1, j - 1);
            const double m = softmin3(r(i - 1, j - 1), r(i - 1, j), r(i, j - 1), g);
            // Banned/unreachable cells stay pinned at the sentinel.
            r(i, j) = (is_inf_cost(d) || is_inf_cost(m)) ? inf_cost : d + m;
        }
    }
    out.value = r(k, k);
    return out;
}

SoftAlignment soft_dtw_grad(const CostMatrix& cost, DpTables& tables) {
    check_tables(cost, tables, "soft_dtw_grad");
    const std::size_t k = cost.k();
    const double g = cost.gamma;
    Matrix& r = tables.r;

    tables.e = Matrix(k + 2, k + 2, 0.0);
    Matrix& e = tables.e;

    // Virtual boundary for the reverse recursion: row/col k+1 carries no
    // mass except the corner, which seeds the recursion with occupancy 1.
    for (std::size_t i = 0; i <= k; ++i) {
        r(i, k + 1) = -inf_cost;
        r(k + 1, i) = -inf_cost;
    }
    r(k + 1, k + 1) = r(k, k);
    e(k + 1, k + 1) = 1.0;

    for (std::size_t j = k; j >= 1; --j) {
        for (std::size_t i = k; i >= 1; --i) {
            if (is_inf_cost(cost.delta(i - 1, j - 1))) {
                continue; // banned cell, occupancy 0
            }
            const double rij = r(i, j);
            double acc = 0.0;
            // down (i+1, j)
            if (i < k && !is_inf_cost(cost.delta(i, j - 1))) {
                acc += std::exp((r(i + 1, j) - rij - cost.delta(i, j - 1)) / g) * e(i + 1, j);
            }
            // right (i, j+1)
            if (j < k && !is_inf_cost(cost.delta(i - 1, j))) {
                acc += std::exp((r(i, j + 1) - rij - cost.delta(i - 1, j)) / g) * e(i, j + 1);
            }
            // diagonal (i+1, j+1), including the virtual corner from (k,k)
            if (i < k && j < k) {
                if (!is_inf_cost(cost.delta(i, j))) {
                    acc += std::exp((r(i + 1, j + 1) - rij - cost.delta(i, j)) / g) * e(i + 1, j + 1);
                }
            } else if (i == k && j == k) {
                acc += std::exp((r(k + 1, k + 1) - rij) / g); // e(k+1,k+1) = 1
            }
            e(i, j) = acc;
        }
    }
    tables.has_occupancy = true;

    SoftAlignment out{Matrix(k, k)};
    for (std::size_t h = 0; h < k; ++h) {
        for (std::size_t j = 0; j < k; ++j) {
            out.weights(h, j) = e(h + 1, j + 1);
        }
    }
    return out;
}

Matrix soft_dtw_grad_jvp(const CostMatrix& cost, const Matrix& direction,
                         DpTables& tables) {
    const std::size_t k = cost.k();
    if (direction.rows() != k || direction.cols() != k) {
        throw std::invalid_argument("soft_dtw_grad_jvp: direction shape mismatch");
    }
    for (double v : direction.values()) {
        if (!std::isfinite(v) || is_inf_cost(std::abs(v))) {
            throw std::invalid_argument("soft_dtw_grad_jvp: direction entries must be finite");
        }
    }
    if (!tables.has_occupancy) {
        soft_dtw_grad(cost, tables); // validates table/cost pairing
    } else {
        check_tables(cost, tables, "soft_dtw_grad_jvp");
    }
    const double g = cost.gamma;
    const Matrix& r = tables.r;
    const Matrix& e = tables.e;

    tables.r_dot = Matrix(k + 2, k + 2, 0.0);
    tables.e_dot = Matrix(k + 2, k + 2, 0.0);
    Matrix& rd = tables.r_dot;
    Matrix& ed = tables.e_dot;

    // Forward-mode sweep over r: the border cells are constants (dot = 0)
    // and softmin weights are recovered from the stored table as
    // exp((softmin - r(pred)) / gamma) with softmin = r(i,j) - delta(i,j).
    for (std::size_t i = 1; i <= k; ++i) {
        for (std::size_t j = 1; j <= k; ++j) {
            if (is_inf_cost(r(i, j))) {
                continue; // pinned at the sentinel, derivative 0
            }
            const double m = r(i, j) - cost.delta(i - 1, j - 1);
            double acc = direction(i - 1, j - 1);
            const double rdiag = r(i - 1, j - 1);
            const double rvert = r(i - 1, j);
            const double rhorz = r(i, j - 1);
            if (!is_inf_cost(rdiag)) {
                acc += std::exp((m - rdiag) / g) * rd(i - 1, j - 1);
            }
            if (!is_inf_cost(rvert)) {
                acc += std::exp((m - rvert) / g) * rd(i - 1, j);
            }
            if (!is_inf_cost(rhorz)) {
                acc += std::exp((m - rhorz) / g) * rd(i, j - 1);
            }
            rd(i, j) = acc;
        }
    }

    // Forward-mode sweep over e. The virtual corner contributes nothing:
    // its occupancy is the constant 1 and its r_dot tracks rd(k,k), so both
    // terms of the product rule vanish there.
    for (std::size_t j = k; j >= 1; --j) {
        for (std::size_t i = k; i >= 1; --i) {
            if (is_inf_cost(cost.delta(i - 1, j - 1))) {
                continue;
            }
            const double rij = r(i, j);
            const double rdij = rd(i, j);
            double acc = 0.0;
            if (i < k && !is_inf_cost(cost.delta(i, j - 1))) {
                const double w = std::exp((r(i + 1, j) - rij - cost.delta(i, j - 1)) / g);
                const double wdot = w * (rd(i + 1, j) - rdij - direction(i, j - 1)) / g;
                acc += w * ed(i + 1, j) + wdot * e(i + 1, j);
            }
            if (j < k && !is_inf_cost(cost.delta(i - 1, j))) {
                const double w = std::exp((r(i, j + 1) - rij - cost.delta(i - 1, j)) / g);
                const double wdot = w * (rd(i, j + 1) - rdij - direction(i - 1, j)) / g;
                acc += w * ed(i, j + 1) + wdot * e(i, j + 1);
            }
            if (i < k && j < k && !is_inf_cost(cost.delta(i, j))) {
                const double w = std::exp((r(i + 1, j + 1) - rij - cost.delta(i, j)) / g);
                const double wdot = w * (rd(i + 1, j + 1) - rdij - direction(i, j)) / g;
                acc += w * ed(i + 1, j + 1) + wdot * e(i + 1, j + 1);
            }
            ed(i, j) = acc;
        }
    }

    Matrix out(k, k);
    for (std::size_t h = 0; h < k; ++h) {
        for (std::size_t j = 0; j < k; ++j) {
            out(h, j) = ed(h + 1, j + 1);
        }
    }
    return out;
}

Matrix soft_dtw_grad_jvp(const CostMatrix& cost, const Matrix& direction) {
    SoftDtwResult fwd = soft_dtw_forward(cost);
    return soft_dtw_grad_jvp(cost, direction, fwd.tables);
}

HardDtwResult hard_dtw(const CostMatrix& cost) {
    validate_cost(cost);
    const std::size_t k = cost.k();

    Matrix h(k + 1, k + 1, inf_cost);
    h(0, 0) = 0.0;
    for (std::size_t i = 1; i <= k; ++i) {
        for (std::size_t j = 1; j <= k; ++j) {
            const double d = cost.delta(i - 1, j - 1);
            const double best = std::min({h(i - 1, j - 1), h(i - 1, j), h(i, j - 1)});
            h(i, j) = (is_inf_cost(d) || is_inf_cost(best)) ? inf_cost : d + best;
        }
    }

    HardDtwResult out;
    out.value = h(k, k);

    // Backtrack with the fixed tie-break diagonal > vertical > horizontal.
    std::vector<std::pair<std::size_t, std::size_t>> rev;
    std::size_t i = k;
    std::size_t j = k;
    rev.emplace_back(i - 1, j - 1);
    while (i > 1 || j > 1) {
        const double diag = h(i - 1, j - 1);
        const double vert = h(i - 1, j);
        const double horz = h(i, j - 1);
        const double best = std::min({diag, vert, horz});
        if (diag == best) {
            --i;
            --j;
        } else if (vert == best) {
            --i;
        } else {
            --j;
        }
        rev.emplace_back(i - 1, j - 1);
    }
    out.path.cells.assign(rev.rbegin(), rev.rend());
    return out;
}

} // namespace dilate
