#include "dilate/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace dilate {

namespace {

void validate_pair(const TimeSeries& pred, const TimeSeries& target) {
    validate_series(pred);
    validate_series(target);
    if (pred.dims() != target.dims() || pred.steps() != target.steps()) {
        throw std::invalid_argument("loss: shape mismatch between prediction and target");
    }
}

void validate_config(const LossConfig& config) {
    if (config.alpha < 0.0 || config.alpha > 1.0) {
        throw std::invalid_argument("loss: alpha must lie in [0, 1]");
    }
    if (!(config.gamma > 0.0)) {
        throw std::invalid_argument("loss: gamma must be positive");
    }
}

// grad(dim, h) = sum_j w(h, j) * 2 (pred(dim, h) - target(dim, j)): the
// chain rule of any <w, delta>-shaped term through the squared Euclidean cost.
Matrix chain_through_cost(const Matrix& w, const TimeSeries& pred,
                          const TimeSeries& target) {
    const std::size_t d = pred.dims();
    const std::size_t k = pred.steps();
    Matrix grad(d, k, 0.0);
    for (std::size_t h = 0; h < k; ++h) {
        for (std::size_t j = 0; j < k; ++j) {
            const double wh = w(h, j);
            if (wh == 0.0) {
                continue;
            }
            for (std::size_t dim = 0; dim < d; ++dim) {
                grad(dim, h) += wh * 2.0 * (pred.values(dim, h) - target.values(dim, j));
            }
        }
    }
    return grad;
}

// <w, omega> skipping sentinel cells; out-of-band cells carry no occupancy.
double dot_finite(const Matrix& w, const Matrix& omega) {
    double acc = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) {
        for (std::size_t j = 0; j < w.cols(); ++j) {
            if (!is_inf_cost(omega(i, j))) {
                acc += w(i, j) * omega(i, j);
            }
        }
    }
    return acc;
}

PenaltyMatrix make_penalty(const LossConfig& config, std::size_t k) {
    switch (config.omega_kind) {
    case PenaltyKind::squared:
        return squared_penalty(k);
    case PenaltyKind::sakoe_chiba:
        return sakoe_chiba_penalty(k, config.band_width);
    case PenaltyKind::weighted:
        return weighted_penalty(k);
    }
    throw std::invalid_argument("loss: unknown penalty kind");
}

} // namespace

PenaltyMatrix squared_penalty(std::size_t k) {
    if (k == 0) {
        throw std::invalid_argument("penalty: k must be positive");
    }
    PenaltyMatrix out{Matrix(k, k), PenaltyKind::squared};
    const double scale = 1.0 / (static_cast<double>(k) * static_cast<double>(k));
    for (std::size_t h = 0; h < k; ++h) {
        for (std::size_t j = 0; j < k; ++j) {
            const double diff = static_cast<double>(h) - static_cast<double>(j);
            out.omega(h, j) = diff * diff * scale;
        }
    }
    return out;
}

PenaltyMatrix sakoe_chiba_penalty(std::size_t k, std::size_t band_width) {
    if (k == 0) {
        throw std::invalid_argument("penalty: k must be positive");
    }
    PenaltyMatrix out{Matrix(k, k, 0.0), PenaltyKind::sakoe_chiba};
    for (std::size_t h = 0; h < k; ++h) {
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t gap = h > j ? h - j : j - h;
            if (gap > band_width) {
                out.omega(h, j) = inf_cost;
            }
        }
    }
    return out;
}

PenaltyMatrix weighted_penalty(std::size_t k) {
    const double kd = static_cast<double>(k);
    return weighted_penalty(k, [kd](std::size_t m) { return static_cast<double>(m) / kd; });
}

PenaltyMatrix weighted_penalty(std::size_t k,
                               const std::function<double(std::size_t)>& f) {
    if (k == 0) {
        throw std::invalid_argument("penalty: k must be positive");
    }
    std::vector<double> fv(k);
    for (std::size_t m = 0; m < k; ++m) {
        fv[m] = f(m);
    }
    if (fv[0] != 0.0) {
        throw std::invalid_argument("penalty: weighted f must satisfy f(0) = 0");
    }
    for (std::size_t m = 1; m < k; ++m) {
        if (!(fv[m] >= fv[m - 1]) || !std::isfinite(fv[m])) {
            throw std::invalid_argument("penalty: weighted f must be finite and nondecreasing");
        }
    }
    PenaltyMatrix out{Matrix(k, k), PenaltyKind::weighted};
    for (std::size_t h = 0; h < k; ++h) {
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t gap = h > j ? h - j : j - h;
            out.omega(h, j) = fv[gap];
        }
    }
    return out;
}

LossResult shape_loss(const TimeSeries& pred, const TimeSeries& target,
                      double gamma) {
    validate_pair(pred, target);
    CostMatrix cost = pairwise_cost(pred, target, gamma);
    SoftDtwResult fwd = soft_dtw_forward(cost);
    SoftAlignment align = soft_dtw_grad(cost, fwd.tables);

    LossResult out;
    out.value = fwd.value;
    out.shape_part = fwd.value;
    out.temporal_part = 0.0;
    out.grad = chain_through_cost(align.weights, pred, target);
    return out;
}

LossResult temporal_loss(const TimeSeries& pred, const TimeSeries& target,
                         double gamma, const PenaltyMatrix& omega) {
    validate_pair(pred, target);
    if (omega.kind == PenaltyKind::sakoe_chiba) {
        throw std::invalid_argument(
            "temporal_loss: banded penalty is only valid inside the tangled variant");
    }
    if (omega.k() != pred.steps() || omega.omega.cols() != pred.steps()) {
        throw std::invalid_argument("temporal_loss: penalty shape mismatch");
    }
    CostMatrix cost = pairwise_cost(pred, target, gamma);
    SoftDtwResult fwd = soft_dtw_forward(cost);
    SoftAlignment align = soft_dtw_grad(cost, fwd.tables);
    Matrix hvp = soft_dtw_grad_jvp(cost, omega.omega, fwd.tables);

    LossResult out;
    out.value = dot(align.weights, omega.omega);
    out.shape_part = 0.0;
    out.temporal_part = out.value;
    out.grad = chain_through_cost(hvp, pred, target);
    return out;
}

LossResult dilate_loss(const TimeSeries& pred, const TimeSeries& target,
                       const LossConfig& config) {
    validate_pair(pred, target);
    validate_config(config);
    const std::size_t k = pred.steps();
    PenaltyMatrix omega = make_penalty(config, k);
    if (omega.kind == PenaltyKind::sakoe_chiba) {
        throw std::invalid_argument(
            "dilate_loss: banded penalty is only valid inside the tangled variant");
    }

    // One shared DP pass: delta, r and e feed both terms.
    CostMatrix cost = pairwise_cost(pred, target, config.gamma);
    SoftDtwResult fwd = soft_dtw_forward(cost);
    SoftAlignment align = soft_dtw_grad(cost, fwd.tables);

    LossResult out;
    out.shape_part = fwd.value;
    out.temporal_part = dot(align.weights, omega.omega);
    out.value = config.alpha * out.shape_part + (1.0 - config.alpha) * out.temporal_part;

    if (config.alpha == 1.0) {
        // Pure shape: skip the Hessian pass so the alpha = 1 configuration
        // reproduces shape_loss bit for bit.
        out.grad = chain_through_cost(align.weights, pred, target);
        return out;
    }
    Matrix hvp = soft_dtw_grad_jvp(cost, omega.omega, fwd.tables);
    Matrix w(k, k);
    for (std::size_t h = 0; h < k; ++h) {
        for (std::size_t j = 0; j < k; ++j) {
            w(h, j) = config.alpha * align.weights(h, j) + (1.0 - config.alpha) * hvp(h, j);
        }
    }
    out.grad = chain_through_cost(w, pred, target);
    return out;
}

LossResult dilate_tangled_loss(const TimeSeries& pred, const TimeSeries& target,
                               const LossConfig& config,
                               const PenaltyMatrix& omega) {
    validate_pair(pred, target);
    validate_config(config);
    const std::size_t k = pred.steps();
    if (omega.k() != k || omega.omega.cols() != k) {
        throw std::invalid_argument("dilate_tangled_loss: penalty shape mismatch");
    }
    if (config.alpha == 0.0 && omega.kind == PenaltyKind::sakoe_chiba) {
        throw std::invalid_argument(
            "dilate_tangled_loss: alpha = 0 with a banded penalty leaves a degenerate cost");
    }

    CostMatrix cost = pairwise_cost(pred, target, config.gamma);
    CostMatrix blended{Matrix(k, k), config.gamma};
    for (std::size_t h = 0; h < k; ++h) {
        for (std::size_t j = 0; j < k; ++j) {
            const double o = omega.omega(h, j);
            // At alpha = 1 the penalty vanishes from the blend, band included.
            blended.delta(h, j) = (config.alpha < 1.0 && is_inf_cost(o))
                                      ? inf_cost
                                      : config.alpha * cost.delta(h, j) + (1.0 - config.alpha) * o;
        }
    }
    SoftDtwResult fwd = soft_dtw_forward(blended);
    SoftAlignment align = soft_dtw_grad(blended, fwd.tables);

    LossResult out;
    out.value = fwd.value;
    // Diagnostic split of the blended path.
    out.shape_part = dot(align.weights, cost.delta);
    out.temporal_part = dot_finite(align.weights, omega.omega);
    Matrix w(k, k);
    for (std::size_t h = 0; h < k; ++h) {
        for (std::size_t j = 0; j < k; ++j) {
            w(h, j) = config.alpha * align.weights(h, j);
        }
    }
    out.grad = chain_through_cost(w, pred, target);
    return out;
}

LossResult mse_loss(const TimeSeries& pred, const TimeSeries& target) {
    validate_pair(pred, target);
    const std::size_t d = pred.dims();
    const std::size_t k = pred.steps();
    const double n = static_cast<double>(d * k);

    LossResult out;
    out.grad = Matrix(d, k);
    double acc = 0.0;
    for (std::size_t dim = 0; dim < d; ++dim) {
        for (std::size_t h = 0; h < k; ++h) {
            const double diff = pred.values(dim, h) - target.values(dim, h);
            acc += diff * diff;
            out.grad(dim, h) = 2.0 * diff / n;
        }
    }
    out.value = acc / n;
    out.shape_part = out.value;
    out.temporal_part = 0.0;
    return out;
}

} // namespace dilate
