#ifndef FEDPHISH_METRICS_HPP
#define FEDPHISH_METRICS_HPP

#include <cstdint>
#include <vector>

namespace fedphish {

/// Binary-classification confusion counts and the four derived rates.
/// Positive class is phishing (label 1). Zero-denominator rates are reported
/// as 0 with the corresponding `*_defined` flag cleared.
struct Metrics {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
    bool accuracy_defined = false;
    bool precision_defined = false;
    bool recall_defined = false;
    bool f1_defined = false;

    std::int64_t total() const { return tp + fp + tn + fn; }
};

/// Derive the four rates from confusion counts. F1 is computed as
/// 2TP/(2TP+FP+FN), which equals the harmonic mean of precision and recall
/// exactly in rational arithmetic.
Metrics metrics_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t tn, std::int64_t fn);

/// Count the confusion matrix of predictions against labels (both in {0,1})
/// and derive rates. Throws UsageError on length mismatch, empty input, or
/// out-of-range values.
Metrics compute_metrics(const std::vector<int>& predictions, const std::vector<int>& labels);

} // namespace fedphish

#endif
