#include "fedphish/optim.hpp"

#include <cmath>

#include "fedphish/errors.hpp"

namespace fedphish {

OptimizerState OptimizerState::for_params(const ParamSet& params, OptimizerKind kind) {
    OptimizerState s;
    s.kind = kind;
    s.first_moment = ParamSet::zeros_like(params);
    s.second_moment = ParamSet::zeros_like(params);
    s.step = 0;
    return s;
}

void optimizer_step(ParamSet& params, const Gradients& grads, OptimizerState& state, double lr,
                    const AdamConfig& cfg) {
    if (!params.shape_compatible(grads))
        throw DimensionError("optimizer_step: gradients incompatible with parameters");
    if (!params.shape_compatible(state.first_moment))
        throw DimensionError("optimizer_step: optimizer state incompatible with parameters");

    state.step += 1;

    if (state.kind == OptimizerKind::Sgd) {
        params.add_scaled(grads, -lr);
        return;
    }

    const double b1 = cfg.beta1, b2 = cfg.beta2, eps = cfg.epsilon;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params.entry(i).tensor.values();
        const auto& g = grads.entry(i).tensor.values();
        auto& m = state.first_moment.entry(i).tensor.values();
        auto& v = state.second_moment.entry(i).tensor.values();
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

} // namespace fedphish
