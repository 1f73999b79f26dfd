#ifndef FEDPHISH_OPTIM_HPP
#define FEDPHISH_OPTIM_HPP

#include <cstdint>

#include "fedphish/params.hpp"

namespace fedphish {

enum class OptimizerKind { Adam, Sgd };

/// Adam moment accumulators plus step counter. Shapes mirror the model's
/// ParamSet; the step counter increases by exactly 1 per update.
struct OptimizerState {
    OptimizerKind kind = OptimizerKind::Adam;
    ParamSet first_moment;
    ParamSet second_moment;
    std::int64_t step = 0;

    static OptimizerState for_params(const ParamSet& params,
                                     OptimizerKind kind = OptimizerKind::Adam);
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// In-place Adam update with bias correction (or plain SGD when the state
/// says so). Throws DimensionError if params/grads/state disagree on shape.
void optimizer_step(ParamSet& params, const Gradients& grads, OptimizerState& state, double lr,
                    const AdamConfig& cfg = {});

} // namespace fedphish

#endif
