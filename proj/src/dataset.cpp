#include "fedphish/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fedphish/errors.hpp"
#include "fedphish/params.hpp"
#include "fedphish/rng.hpp"

namespace fedphish {

namespace {

constexpr char kCountedChars[] = {'.', '-', '_', '/', '?', '=', '@', '&', '!',
                                  ' ', '~', ',', '+', '*', '#', '$', '%'};
constexpr int kCountedCharCount = 17;

std::vector<std::string> build_canonical_names() {
    return {"url_length",   "count_dot",       "count_hyphen",     "count_underscore",
            "count_slash",  "count_question",  "count_equal",      "count_at",
            "count_ampersand", "count_exclamation", "count_space", "count_tilde",
            "count_comma",  "count_plus",      "count_asterisk",   "count_hashtag",
            "count_dollar", "count_percent",   "count_redirection"};
}

} // namespace

const std::vector<std::string>& canonical_feature_names() {
    static const std::vector<std::string> names = build_canonical_names();
    return names;
}

std::vector<double> extract_features(const std::string& url) {
    if (url.empty()) throw DataError("extract_features: empty URL");
    std::vector<double> f(kCanonicalFeatureCount, 0.0);
    f[0] = static_cast<double>(url.size());
    for (unsigned char c : url) {
        for (int i = 0; i < kCountedCharCount; ++i) {
            if (c == static_cast<unsigned char>(kCountedChars[i])) {
                f[static_cast<std::size_t>(1 + i)] += 1.0;
                break;
            }
        }
    }
    // Non-overlapping "//" pairs starting at offset >= 8, skipping the
    // protocol separator of schemes like "http://".
    double redirections = 0.0;
    for (std::size_t i = 8; i + 1 < url.size();) {
        if (url[i] == '/' && url[i + 1] == '/') {
            redirections += 1.0;
            i += 2;
        } else {
            i += 1;
        }
    }
    f[kCanonicalFeatureCount - 1] = redirections;
    return f;
}

Tensor Dataset::feature_matrix() const {
    const std::int64_t n = static_cast<std::int64_t>(records.size());
    const std::int64_t w = width();
    Tensor m = Tensor::zeros({n, w});
    for (std::int64_t r = 0; r < n; ++r) {
        const auto& f = records[static_cast<std::size_t>(r)].features;
        if (static_cast<std::int64_t>(f.size()) != w)
            throw DataError("dataset: record " + std::to_string(r) + " width " +
                            std::to_string(f.size()) + " != " + std::to_string(w));
        for (std::int64_t c = 0; c < w; ++c) m.at(r, c) = f[static_cast<std::size_t>(c)];
    }
    return m;
}

std::vector<int> Dataset::labels() const {
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.label);
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

int parse_label_cell(const std::string& cell, std::size_t line_no, const std::string& path) {
    const double v = parse_double(cell, path + " line " + std::to_string(line_no) + " label");
    if (v == 0.0) return 0;
    if (v == 1.0) return 1;
    throw DataError(path + " line " + std::to_string(line_no) + ": label '" + cell +
                    "' outside {0,1}");
}

} // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(is, line)) throw DataError(path + ": empty file (no header)");
    std::vector<std::string> header = split_csv_line(strip_cr(line));
    if (header.size() < 2)
        throw DataError(path + ": header needs at least one feature and a label column");
    if (header.back() != "label")
        throw DataError(path + ": last header column is '" + header.back() + "', expected 'label'");
    header.pop_back();

    Dataset ds;
    ds.feature_names = header;
    ds.source = path;
    const std::size_t width = header.size();
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != width + 1)
            throw DataError(path + " line " + std::to_string(line_no) + ": " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(width + 1));
        DatasetRecord rec;
        rec.features.reserve(width);
        for (std::size_t c = 0; c < width; ++c)
            rec.features.push_back(parse_double(
                cells[c], path + " line " + std::to_string(line_no) + " column '" + header[c] + "'"));
        rec.label = parse_label_cell(cells[width], line_no, path);
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

bool csv_has_url_header(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(is, line)) return false;
    return strip_cr(line) == "url,label";
}

Dataset load_url_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(is, line)) throw DataError(path + ": empty file (no header)");
    if (strip_cr(line) != "url,label")
        throw DataError(path + ": raw-URL mode expects header 'url,label', got '" +
                        strip_cr(line) + "'");
    Dataset ds;
    ds.feature_names = canonical_feature_names();
    ds.source = path;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        // URLs may contain commas; the label is everything after the last one.
        const std::size_t cut = line.rfind(',');
        if (cut == std::string::npos)
            throw DataError(path + " line " + std::to_string(line_no) + ": no label column");
        const std::string url = line.substr(0, cut);
        if (url.empty())
            throw DataError(path + " line " + std::to_string(line_no) + ": empty URL");
        DatasetRecord rec;
        rec.features = extract_features(url);
        rec.label = parse_label_cell(line.substr(cut + 1), line_no, path);
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

Dataset undersample_balance(const Dataset& ds, std::uint64_t seed) {
    std::size_t c0 = 0, c1 = 0;
    for (const auto& r : ds.records) (r.label == 0 ? c0 : c1) += 1;
    if (c0 == 0 || c1 == 0)
        throw DataError("undersample: class " + std::string(c0 == 0 ? "0" : "1") +
                        " absent, nothing to balance against");
    Dataset out;
    out.feature_names = ds.feature_names;
    out.source = ds.source;
    if (c0 == c1) {
        out.records = ds.records;
        return out;
    }
    const int majority = c0 > c1 ? 0 : 1;
    const std::size_t keep = std::min(c0, c1);
    std::vector<std::size_t> majority_idx;
    majority_idx.reserve(std::max(c0, c1));
    for (std::size_t i = 0; i < ds.records.size(); ++i)
        if (ds.records[i].label == majority) majority_idx.push_back(i);

    RngStream rng(derive_seed(seed, "undersample"));
    const std::vector<std::size_t> chosen =
        rng.sample_without_replacement(majority_idx.size(), keep);
    std::vector<bool> keep_mask(ds.records.size(), false);
    for (std::size_t i = 0; i < ds.records.size(); ++i)
        if (ds.records[i].label != majority) keep_mask[i] = true;
    for (std::size_t pos : chosen) keep_mask[majority_idx[pos]] = true;

    out.records.reserve(2 * keep);
    for (std::size_t i = 0; i < ds.records.size(); ++i)
        if (keep_mask[i]) out.records.push_back(ds.records[i]);
    return out;
}

NormStats compute_norm_stats(const Dataset& ds) {
    if (ds.records.empty()) throw DataError("norm stats: empty dataset");
    const std::size_t w = static_cast<std::size_t>(ds.width());
    NormStats stats;
    stats.mean.assign(w, 0.0);
    stats.stddev.assign(w, 0.0);
    stats.constant.assign(w, false);
    const double n = static_cast<double>(ds.records.size());
    for (const auto& r : ds.records)
        for (std::size_t c = 0; c < w; ++c) stats.mean[c] += r.features[c];
    for (std::size_t c = 0; c < w; ++c) stats.mean[c] /= n;
    for (const auto& r : ds.records)
        for (std::size_t c = 0; c < w; ++c) {
            const double d = r.features[c] - stats.mean[c];
            stats.stddev[c] += d * d;
        }
    for (std::size_t c = 0; c < w; ++c) {
        stats.stddev[c] = std::sqrt(stats.stddev[c] / n);
        stats.constant[c] = stats.stddev[c] == 0.0;
    }
    return stats;
}

Dataset standardize(const Dataset& ds, const NormStats& stats) {
    if (stats.width() != static_cast<std::size_t>(ds.width()))
        throw UsageError("standardize: stats width " + std::to_string(stats.width()) +
                         " != dataset width " + std::to_string(ds.width()));
    Dataset out;
    out.feature_names = ds.feature_names;
    out.source = ds.source;
    out.records.reserve(ds.records.size());
    for (const auto& r : ds.records) {
        DatasetRecord rec;
        rec.label = r.label;
        rec.features.resize(r.features.size());
        for (std::size_t c = 0; c < r.features.size(); ++c)
            rec.features[c] =
                stats.constant[c] ? 0.0 : (r.features[c] - stats.mean[c]) / stats.stddev[c];
        out.records.push_back(std::move(rec));
    }
    return out;
}

std::pair<Dataset, NormStats> standardize(const Dataset& ds) {
    NormStats stats = compute_norm_stats(ds);
    return {standardize(ds, stats), std::move(stats)};
}

std::vector<CorrelationEntry> correlation_report(const Dataset& ds) {
    if (ds.records.size() < 2)
        throw DataError("correlation: need at least 2 records, got " +
                        std::to_string(ds.records.size()));
    const std::size_t w = static_cast<std::size_t>(ds.width());
    const double n = static_cast<double>(ds.records.size());

    double label_mean = 0.0;
    for (const auto& r : ds.records) label_mean += r.label;
    label_mean /= n;
    double label_var = 0.0;
    for (const auto& r : ds.records) {
        const double d = r.label - label_mean;
        label_var += d * d;
    }

    std::vector<CorrelationEntry> report(w);
    for (std::size_t c = 0; c < w; ++c) {
        report[c].feature = ds.feature_names[c];
        double mean = 0.0;
        for (const auto& r : ds.records) mean += r.features[c];
        mean /= n;
        double var = 0.0, cov = 0.0;
        for (const auto& r : ds.records) {
            const double d = r.features[c] - mean;
            var += d * d;
            cov += d * (r.label - label_mean);
        }
        if (var == 0.0 || label_var == 0.0) {
            report[c].r = 0.0;
            report[c].constant = true;
        } else {
            report[c].r = cov / std::sqrt(var * label_var);
            // Guard rounding just past the closed interval.
            report[c].r = std::clamp(report[c].r, -1.0, 1.0);
        }
    }
    return report;
}

PartitionMode parse_partition_mode(const std::string& name) {
    if (name == "shuffled") return PartitionMode::Shuffled;
    if (name == "drift") return PartitionMode::Drift;
    throw ConfigError("unknown partition mode '" + name + "' (expected shuffled or drift)");
}

std::string partition_mode_name(PartitionMode mode) {
    return mode == PartitionMode::Shuffled ? "shuffled" : "drift";
}

namespace {

Dataset subset_by_indices(const Dataset& ds, const std::vector<std::size_t>& idx,
                          std::size_t begin, std::size_t end) {
    Dataset out;
    out.feature_names = ds.feature_names;
    out.source = ds.source;
    out.records.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) out.records.push_back(ds.records[idx[i]]);
    return out;
}

std::vector<Dataset> chunk_by_indices(const Dataset& ds, const std::vector<std::size_t>& idx,
                                      int parts) {
    const std::size_t n = idx.size();
    const std::size_t base = n / static_cast<std::size_t>(parts);
    const std::size_t rem = n % static_cast<std::size_t>(parts);
    std::vector<Dataset> out;
    out.reserve(static_cast<std::size_t>(parts));
    std::size_t at = 0;
    for (int p = 0; p < parts; ++p) {
        const std::size_t len = base + (static_cast<std::size_t>(p) < rem ? 1 : 0);
        out.push_back(subset_by_indices(ds, idx, at, at + len));
        at += len;
    }
    return out;
}

} // namespace

StreamPartition partition_streams(const Dataset& ds, int S, PartitionMode mode,
                                  std::uint64_t seed) {
    if (S < 1) throw ConfigError("partition: stream count must be >= 1");
    if (static_cast<std::size_t>(S) > ds.records.size())
        throw ConfigError("partition: " + std::to_string(S) + " streams for " +
                          std::to_string(ds.records.size()) + " records");
    std::vector<std::size_t> idx(ds.records.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (mode == PartitionMode::Shuffled) {
        RngStream rng(derive_seed(seed, "partition"));
        rng.shuffle(idx);
    } else {
        // Drift orders by url_length (first feature if the schema lacks it);
        // stable sort keeps ties in original order.
        std::size_t key = 0;
        for (std::size_t c = 0; c < ds.feature_names.size(); ++c)
            if (ds.feature_names[c] == "url_length") key = c;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return ds.records[a].features[key] < ds.records[b].features[key];
        });
    }
    StreamPartition part;
    part.mode = mode;
    part.streams = chunk_by_indices(ds, idx, S);
    return part;
}

std::vector<Dataset> shard_for_nodes(const Dataset& stream, int N, std::uint64_t seed) {
    if (N < 1) throw ConfigError("shard: node count must be >= 1");
    if (static_cast<std::size_t>(N) > stream.records.size())
        throw ConfigError("shard: " + std::to_string(N) + " nodes for " +
                          std::to_string(stream.records.size()) + " records");
    std::vector<std::size_t> idx(stream.records.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    RngStream rng(derive_seed(seed, "shard"));
    rng.shuffle(idx);
    return chunk_by_indices(stream, idx, N);
}

TrainTestSplit train_test_split(const Dataset& ds, std::uint64_t seed) {
    if (ds.records.empty()) throw DataError("train/test split: empty dataset");
    std::vector<std::size_t> idx(ds.records.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    RngStream rng(derive_seed(seed, "split"));
    rng.shuffle(idx);
    const std::size_t train_n = std::max<std::size_t>(1, ds.records.size() * 4 / 5);
    TrainTestSplit split;
    split.train = subset_by_indices(ds, idx, 0, train_n);
    split.test = subset_by_indices(ds, idx, train_n, idx.size());
    return split;
}

} // namespace fedphish
