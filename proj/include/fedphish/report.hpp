#ifndef FEDPHISH_REPORT_HPP
#define FEDPHISH_REPORT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedphish/continual.hpp"
#include "fedphish/federated.hpp"
#include "fedphish/model.hpp"

namespace fedphish {

inline constexpr const char* kVersionString = "fedphish 0.1.0";

/// Flat echo of the experiment setup, embedded in every report.
struct ConfigEcho {
    std::string dataset;  // path or "synthetic"
    int synthetic_count = 0;
    bool raw_urls = false;
    std::vector<std::string> models;
    std::vector<std::string> strategies;
    int rounds = 0, nodes = 0, streams = 0, local_epochs = 0, batch_size = 0;
    double lr = 0.0;
    std::string partition, window, attn_tokens;
    bool normalize = true;
    std::uint64_t seed = 0;
};

struct CellResult {
    ModelKind model = ModelKind::SimpleMLP;
    StrategyKind strategy = StrategyKind::Naive;
    SimulationResult sim;
    double wall_seconds = 0.0; // reported only in timings.json
};

struct RunReport {
    ConfigEcho config;
    std::vector<CellResult> cells;
    std::string version = kVersionString;
    double total_wall_seconds = 0.0; // reported only in timings.json
};

// Machine formats carry full precision (shortest round-trip decimals) and no
// wall-clock content, so identical seeds produce byte-identical files.
void write_csv(std::ostream& os, const RunReport& report);
void write_json(std::ostream& os, const RunReport& report);

/// Presentation format: one table per strategy, models as rows, final
/// union-fold metrics rounded to 2 decimals.
void write_markdown(std::ostream& os, const RunReport& report);

/// Writes report.csv / report.json / report.md for the requested formats
/// ("csv", "json", "markdown") into out_dir (created if missing), plus
/// timings.json whenever any format was requested. Returns written paths.
std::vector<std::string> emit_report(const RunReport& report, const std::string& out_dir,
                                     const std::vector<std::string>& formats);

} // namespace fedphish

#endif
