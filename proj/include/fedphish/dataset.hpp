#ifndef FEDPHISH_DATASET_HPP
#define FEDPHISH_DATASET_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedphish/tensor.hpp"

namespace fedphish {

inline constexpr int kCanonicalFeatureCount = 19;

/// url_length, 17 character counts, count_redirection, in fixed order.
const std::vector<std::string>& canonical_feature_names();

/// Lexical features of one URL under the canonical schema. Counting is
/// byte-wise; count_redirection is the number of non-overlapping "//" pairs
/// starting at byte offset 8 or later (the protocol separator never counts).
/// Throws DataError on an empty string.
std::vector<double> extract_features(const std::string& url);

struct DatasetRecord {
    std::vector<double> features;
    int label = 0; // 1 = phishing, 0 = legitimate
};

struct Dataset {
    std::vector<DatasetRecord> records;
    std::vector<std::string> feature_names;
    std::string source;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
    std::int64_t width() const { return static_cast<std::int64_t>(feature_names.size()); }

    /// [size, width] feature matrix plus the label column, for batched eval.
    Tensor feature_matrix() const;
    std::vector<int> labels() const;
};

/// Numeric CSV: header row, last column `label` with values in {0,1}, all
/// other columns numeric. Any feature width is accepted. Errors carry
/// 1-based line numbers and column names.
Dataset load_csv(const std::string& path);

/// Raw-URL CSV: header `url,label`; rows split at the last comma so URLs may
/// contain commas. Features come from extract_features.
Dataset load_url_csv(const std::string& path);

/// True when the file's header line is exactly `url,label`.
bool csv_has_url_header(const std::string& path);

/// Downsample the majority class to the minority count by uniform seeded
/// sampling without replacement; survivors keep their original order.
Dataset undersample_balance(const Dataset& ds, std::uint64_t seed);

struct NormStats {
    std::vector<double> mean;
    std::vector<double> stddev;           // population std; 0 marks a constant feature
    std::vector<bool> constant;

    std::size_t width() const { return mean.size(); }
};

/// Compute per-feature mean/std over `ds`.
NormStats compute_norm_stats(const Dataset& ds);

/// Apply (x-mean)/std per feature; constant features map to 0. Use the
/// frozen-stats overload for data outside the fitting fold.
Dataset standardize(const Dataset& ds, const NormStats& stats);
std::pair<Dataset, NormStats> standardize(const Dataset& ds);

struct CorrelationEntry {
    std::string feature;
    double r = 0.0;
    bool constant = false; // feature (or label) had zero variance; r forced to 0
};

/// Pearson correlation of each feature with the binary label.
/// Throws DataError when the dataset has fewer than 2 records.
std::vector<CorrelationEntry> correlation_report(const Dataset& ds);

enum class PartitionMode { Shuffled, Drift };

PartitionMode parse_partition_mode(const std::string& name);
std::string partition_mode_name(PartitionMode mode);

struct StreamPartition {
    std::vector<Dataset> streams;
    PartitionMode mode = PartitionMode::Shuffled;
};

/// Split into S disjoint streams covering the input. Shuffled mode: seeded
/// shuffle then near-equal contiguous chunks (sizes differ by <= 1). Drift
/// mode: stable sort by url_length ascending (first feature when the schema
/// lacks url_length) then chunk, inducing covariate shift across streams.
StreamPartition partition_streams(const Dataset& ds, int S, PartitionMode mode,
                                  std::uint64_t seed);

/// Seeded shuffle then N near-equal disjoint shards covering the stream.
std::vector<Dataset> shard_for_nodes(const Dataset& stream, int N, std::uint64_t seed);

struct TrainTestSplit {
    Dataset train;
    Dataset test;
};

/// Seeded 80/20 split; train size = max(1, 4n/5).
TrainTestSplit train_test_split(const Dataset& ds, std::uint64_t seed);

} // namespace fedphish

#endif
