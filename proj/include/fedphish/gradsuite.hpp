#ifndef FEDPHISH_GRADSUITE_HPP
#define FEDPHISH_GRADSUITE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace fedphish {

struct GradcheckCase {
    std::string name;
    double max_rel_error = 0.0;
};

struct GradcheckReport {
    std::vector<GradcheckCase> cases;
    double worst = 0.0;

    bool pass(double threshold = 1e-4) const { return worst < threshold; }
};

/// Cross-entropy gradients of randomized small instances of every model
/// kind (both attention token modes included) checked against central
/// differences. `seeds` full sweeps are run; one line per case goes to `log`
/// when given.
GradcheckReport run_model_gradcheck(int seeds, std::uint64_t seed0, std::ostream* log = nullptr);

} // namespace fedphish

#endif
