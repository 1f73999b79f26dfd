#include "fedphish/metrics.hpp"

#include <string>

#include "fedphish/errors.hpp"

namespace fedphish {

Metrics metrics_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t tn, std::int64_t fn) {
    if (tp < 0 || fp < 0 || tn < 0 || fn < 0)
        throw UsageError("metrics: negative confusion count");
    Metrics m;
    m.tp = tp;
    m.fp = fp;
    m.tn = tn;
    m.fn = fn;
    const std::int64_t n = m.total();
    if (n > 0) {
        m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(n);
        m.accuracy_defined = true;
    }
    if (tp + fp > 0) {
        m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        m.precision_defined = true;
    }
    if (tp + fn > 0) {
        m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
        m.recall_defined = true;
    }
    if (2 * tp + fp + fn > 0) {
        m.f1 = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
        m.f1_defined = true;
    }
    return m;
}

Metrics compute_metrics(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size())
        throw UsageError("metrics: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(labels.size()) + " labels");
    if (predictions.empty()) throw UsageError("metrics: empty input");
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int p = predictions[i], y = labels[i];
        if ((p != 0 && p != 1) || (y != 0 && y != 1))
            throw UsageError("metrics: non-binary value at index " + std::to_string(i));
        if (p == 1 && y == 1)
            ++tp;
        else if (p == 1 && y == 0)
            ++fp;
        else if (p == 0 && y == 0)
            ++tn;
        else
            ++fn;
    }
    return metrics_from_counts(tp, fp, tn, fn);
}

} // namespace fedphish
