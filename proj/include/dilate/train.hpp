#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "dilate/data.hpp"
#include "dilate/losses.hpp"
#include "dilate/mlp.hpp"

namespace dilate {

enum class LossKind {
    mse,
    dtw_gamma,               ///< pure smoothed-DTW shape loss
    dilate,                  ///< alpha * shape + (1 - alpha) * temporal
    dilate_tangled_weighted, ///< blended cost with the linear weighted penalty
    dilate_tangled_band,     ///< blended cost with the Sakoe-Chiba band
};

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

struct TrainConfig {
    LossKind loss = LossKind::mse;
    LossConfig loss_config;
    std::size_t max_epochs = 1000;
    std::size_t patience = 20;
    std::size_t batch_size = 32;
    std::size_t hidden = 128;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
};

/// Per-sample training objective for a fixed horizon.
using LossFn = std::function<LossResult(const TimeSeries& pred, const TimeSeries& target)>;

LossFn make_loss(LossKind kind, const LossConfig& config, std::size_t horizon);

struct EpochStats {
    double train_loss = 0.0;
    double valid_loss = 0.0;
};

struct TrainTrace {
    std::vector<EpochStats> epochs;
    std::size_t best_epoch = 0; ///< 0-based index into epochs
    double best_valid_loss = 0.0;
    bool diverged = false;
};

struct TrainResult {
    MlpParams params; ///< parameters at the best validation epoch
    TrainTrace trace;
};

/// Minibatch training with Adam and best-validation early stopping; halts
/// after `patience` epochs without improvement or at max_epochs. Fully
/// deterministic for a given config (init, shuffling and reductions all
/// derive from config.seed and run in a fixed order). A non-finite batch
/// loss marks the run diverged and stops it.
TrainResult train(const Dataset& train_set, const Dataset& valid_set,
                  const TrainConfig& config);

} // namespace dilate
