#include "fedphish/gradcheck.hpp"

#include <cmath>

#include "fedphish/errors.hpp"

namespace fedphish {

Gradients numeric_gradients(const LossFn& loss, const ParamSet& params, double eps) {
    if (eps <= 0.0) throw ConfigError("numeric_gradients: eps must be > 0");
    Gradients out = ParamSet::zeros_like(params);
    ParamSet work = params;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& values = work.entry(i).tensor.values();
        auto& grads = out.entry(i).tensor.values();
        for (std::size_t j = 0; j < values.size(); ++j) {
            const double orig = values[j];
            values[j] = orig + eps;
            const double up = loss(work);
            values[j] = orig - eps;
            const double down = loss(work);
            values[j] = orig;
            if (!std::isfinite(up) || !std::isfinite(down))
                throw NumericError("numeric_gradients: non-finite loss at entry '" +
                                   params.entry(i).name + "'");
            grads[j] = (up - down) / (2.0 * eps);
        }
    }
    return out;
}

double max_relative_error(const Gradients& analytic, const Gradients& numeric) {
    if (!analytic.shape_compatible(numeric))
        throw DimensionError("max_relative_error: incompatible gradient sets");
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const auto& a = analytic.entry(i).tensor.values();
        const auto& n = numeric.entry(i).tensor.values();
        for (std::size_t j = 0; j < a.size(); ++j) {
            const double denom = std::max({std::fabs(a[j]), std::fabs(n[j]), 1e-8});
            worst = std::max(worst, std::fabs(a[j] - n[j]) / denom);
        }
    }
    return worst;
}

double finite_diff_check(const LossFn& loss, const Gradients& analytic, const ParamSet& params,
                         double eps) {
    return max_relative_error(analytic, numeric_gradients(loss, params, eps));
}

} // namespace fedphish
