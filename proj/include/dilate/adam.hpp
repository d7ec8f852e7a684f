#pragma once

#include "dilate/mlp.hpp"

namespace dilate {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Per-parameter first/second moment accumulators plus the step counter.
struct AdamState {
    MlpGrads m;
    MlpGrads v;
    long t = 0;
    AdamConfig config;

    static AdamState for_params(const MlpParams& params, AdamConfig config = {});
};

/// Standard bias-corrected Adam update, applied block by block in a fixed
/// order (w1, b1, w2, b2).
void adam_step(AdamState& state, MlpParams& params, const MlpGrads& grads);

} // namespace dilate
