#ifndef FEDPHISH_GRADCHECK_HPP
#define FEDPHISH_GRADCHECK_HPP

#include <functional>

#include "fedphish/params.hpp"

namespace fedphish {

/// Scalar loss as a function of a full parameter set. Must be deterministic:
/// the same params must give the same loss on every call.
using LossFn = std::function<double(const ParamSet&)>;

/// Central-difference gradient of `loss` w.r.t. every parameter value.
/// Throws NumericError if any evaluation is non-finite.
Gradients numeric_gradients(const LossFn& loss, const ParamSet& params, double eps = 1e-5);

/// max over all parameter values of |a - n| / max(|a|, |n|, 1e-8).
double max_relative_error(const Gradients& analytic, const Gradients& numeric);

/// Convenience: analytic gradients vs central differences in one call.
double finite_diff_check(const LossFn& loss, const Gradients& analytic, const ParamSet& params,
                         double eps = 1e-5);

} // namespace fedphish

#endif
