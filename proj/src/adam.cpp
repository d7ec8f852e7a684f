#include "dilate/adam.hpp"

#include <cmath>
#include <span>
#include <stdexcept>

namespace dilate {

namespace {

void update_block(std::span<double> p, std::span<const double> g,
                  std::span<double> m, std::span<double> v,
                  const AdamConfig& c, double bc1, double bc2) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
}

} // namespace

AdamState AdamState::for_params(const MlpParams& params, AdamConfig config) {
    AdamState s;
    s.m = MlpGrads::zeros_like(params);
    s.v = MlpGrads::zeros_like(params);
    s.t = 0;
    s.config = config;
    return s;
}

void adam_step(AdamState& state, MlpParams& params, const MlpGrads& grads) {
    if (!params.w1.same_shape(grads.w1) || !params.w2.same_shape(grads.w2) ||
        params.b1.size() != grads.b1.size() || params.b2.size() != grads.b2.size()) {
        throw std::invalid_argument("adam_step: gradient shape mismatch");
    }
    state.t += 1;
    const AdamConfig& c = state.config;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
    update_block(params.w1.values(), grads.w1.values(), state.m.w1.values(),
                 state.v.w1.values(), c, bc1, bc2);
    update_block(params.b1, grads.b1, state.m.b1, state.v.b1, c, bc1, bc2);
    update_block(params.w2.values(), grads.w2.values(), state.m.w2.values(),
                 state.v.w2.values(), c, bc1, bc2);
    update_block(params.b2, grads.b2, state.m.b2, state.v.b2, c, bc1, bc2);
}

} // namespace dilate
