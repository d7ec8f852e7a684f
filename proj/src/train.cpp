#include "dilate/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>

#include "dilate/adam.hpp"
#include "dilate/dp_kernels.hpp"

namespace dilate {

std::string to_string(LossKind kind) {
    switch (kind) {
    case LossKind::mse: return "mse";
    case LossKind::dtw_gamma: return "dtw";
    case LossKind::dilate: return "dilate";
    case LossKind::dilate_tangled_weighted: return "dilate-t-weighted";
    case LossKind::dilate_tangled_band: return "dilate-t-band";
    }
    throw std::invalid_argument("unknown loss kind");
}

LossKind loss_kind_from_string(const std::string& name) {
    if (name == "mse") return LossKind::mse;
    if (name == "dtw") return LossKind::dtw_gamma;
    if (name == "dilate") return LossKind::dilate;
    if (name == "dilate-t-weighted") return LossKind::dilate_tangled_weighted;
    if (name == "dilate-t-band") return LossKind::dilate_tangled_band;
    throw std::invalid_argument("unknown loss: " + name +
                                " (expected mse|dtw|dilate|dilate-t-weighted|dilate-t-band)");
}

LossFn make_loss(LossKind kind, const LossConfig& config, std::size_t horizon) {
    switch (kind) {
    case LossKind::mse:
        return [](const TimeSeries& p, const TimeSeries& t) { return mse_loss(p, t); };
    case LossKind::dtw_gamma:
        return [g = config.gamma](const TimeSeries& p, const TimeSeries& t) {
            return shape_loss(p, t, g);
        };
    case LossKind::dilate:
        return [config](const TimeSeries& p, const TimeSeries& t) {
            return dilate_loss(p, t, config);
        };
    case LossKind::dilate_tangled_weighted: {
        auto omega = std::make_shared<PenaltyMatrix>(weighted_penalty(horizon));
        return [config, omega](const TimeSeries& p, const TimeSeries& t) {
            return dilate_tangled_loss(p, t, config, *omega);
        };
    }
    case LossKind::dilate_tangled_band: {
        auto omega = std::make_shared<PenaltyMatrix>(
            sakoe_chiba_penalty(horizon, config.band_width));
        return [config, omega](const TimeSeries& p, const TimeSeries& t) {
            return dilate_tangled_loss(p, t, config, *omega);
        };
    }
    }
    throw std::invalid_argument("unknown loss kind");
}

namespace {

bool finite_values(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

double mean_loss(const MlpParams& params, const Dataset& ds, const LossFn& loss_fn) {
    double acc = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::vector<double> pred = mlp_forward(params, ds.inputs.row(i));
        if (!finite_values(pred)) {
            return std::numeric_limits<double>::infinity();
        }
        acc += loss_fn(TimeSeries::from_vector(pred),
                       TimeSeries::from_vector(ds.targets.row(i)))
                   .value;
    }
    return acc / static_cast<double>(ds.size());
}

} // namespace

TrainResult train(const Dataset& train_set, const Dataset& valid_set,
                  const TrainConfig& config) {
    if (train_set.size() == 0 || valid_set.size() == 0) {
        throw std::invalid_argument("train: empty dataset");
    }
    if (train_set.input_len() != valid_set.input_len() ||
        train_set.horizon() != valid_set.horizon()) {
        throw std::invalid_argument("train: train/valid shape mismatch");
    }
    if (config.max_epochs < 1 || config.patience < 1 || config.batch_size < 1) {
        throw std::invalid_argument("train: max_epochs, patience and batch_size must be >= 1");
    }
    const std::size_t n = train_set.input_len();
    const std::size_t k = train_set.horizon();

    const LossFn loss_fn = make_loss(config.loss, config.loss_config, k);
    MlpParams params = init_mlp(n, k, config.hidden, config.seed);
    AdamState adam = AdamState::for_params(params, AdamConfig{config.learning_rate});

    // Distinct stream from the init draws.
    std::mt19937_64 shuffle_rng(config.seed * 0x9e3779b97f4a7c15ULL + 1);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    result.trace.best_valid_loss = std::numeric_limits<double>::infinity();
    MlpParams best = params;
    std::size_t since_improvement = 0;
    MlpCache cache;

    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        bool finite = true;

        for (std::size_t start = 0; start < order.size() && finite;
             start += config.batch_size) {
            const std::size_t stop = std::min(start + config.batch_size, order.size());
            MlpGrads batch_grads = MlpGrads::zeros_like(params);
            double batch_loss = 0.0;
            for (std::size_t b = start; b < stop && finite; ++b) {
                const std::size_t idx = order[b];
                const std::vector<double> pred =
                    mlp_forward(params, train_set.inputs.row(idx), &cache);
                if (!finite_values(pred)) {
                    finite = false;
                    break;
                }
                const LossResult loss =
                    loss_fn(TimeSeries::from_vector(pred),
                            TimeSeries::from_vector(train_set.targets.row(idx)));
                batch_loss += loss.value;
                batch_grads.accumulate(mlp_backward(params, cache, loss.grad.row(0)));
            }
            const double scale = 1.0 / static_cast<double>(stop - start);
            // Losses pinned at the infinity sentinel mean a degenerate model
            // (every alignment cell banned); treat that as divergence too.
            if (!finite || !std::isfinite(batch_loss) || is_inf_cost(std::abs(batch_loss))) {
                finite = false;
                break;
            }
            batch_grads.scale(scale);
            adam_step(adam, params, batch_grads);
            epoch_loss += batch_loss;
        }
        if (!finite) {
            result.trace.diverged = true;
            break;
        }

        EpochStats stats;
        stats.train_loss = epoch_loss / static_cast<double>(order.size());
        stats.valid_loss = mean_loss(params, valid_set, loss_fn);
        result.trace.epochs.push_back(stats);
        if (!std::isfinite(stats.valid_loss) || is_inf_cost(std::abs(stats.valid_loss))) {
            result.trace.diverged = true;
            break;
        }

        if (stats.valid_loss < result.trace.best_valid_loss) {
            result.trace.best_valid_loss = stats.valid_loss;
            result.trace.best_epoch = result.trace.epochs.size() - 1;
            best = params;
            since_improvement = 0;
        } else {
            ++since_improvement;
            if (since_improvement >= config.patience) {
                break;
            }
        }
    }

    result.params = std::move(best);
    return result;
}

} // namespace dilate
