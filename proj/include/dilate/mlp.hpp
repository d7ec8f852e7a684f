#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dilate/matrix.hpp"

namespace dilate {

/// One-hidden-layer fully connected forecaster:
/// pred = w2 * relu(w1 * input + b1) + b2.
struct MlpParams {
    Matrix w1;              ///< hidden x input_len
    std::vector<double> b1; ///< hidden
    Matrix w2;              ///< horizon x hidden
    std::vector<double> b2; ///< horizon

    std::size_t input_len() const { return w1.cols(); }
    std::size_t hidden() const { return w1.rows(); }
    std::size_t horizon() const { return w2.rows(); }
};

/// Seed-deterministic fan-in initialization: every weight and bias of a
/// layer is uniform on (-1/sqrt(fan_in), 1/sqrt(fan_in)).
MlpParams init_mlp(std::size_t input_len, std::size_t horizon,
                   std::size_t hidden, std::uint64_t seed);

/// Pre-activations recorded by the forward pass for backprop.
struct MlpCache {
    std::vector<double> input;
    std::vector<double> z1; ///< w1 * input + b1
    std::vector<double> a1; ///< relu(z1)
};

std::vector<double> mlp_forward(const MlpParams& params,
                                std::span<const double> input,
                                MlpCache* cache = nullptr);

/// Parameter-shaped gradient (or moment) container.
struct MlpGrads {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;

    static MlpGrads zeros_like(const MlpParams& params);
    void accumulate(const MlpGrads& other);
    void scale(double factor);
};

/// Exact reverse-mode gradients of <grad_pred, pred> with respect to all
/// parameters. The relu subgradient at 0 is taken as 0. Throws
/// std::invalid_argument when the cache does not match the parameters.
MlpGrads mlp_backward(const MlpParams& params, const MlpCache& cache,
                      std::span<const double> grad_pred);

/// Text checkpoint: version tag, shapes, then row-major values at full
/// precision. Throws data_error on unreadable or mismatched files.
void save_checkpoint(const std::string& path, const MlpParams& params);
MlpParams load_checkpoint(const std::string& path);

} // namespace dilate
