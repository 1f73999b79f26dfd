#ifndef FEDPHISH_EXPERIMENT_HPP
#define FEDPHISH_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fedphish/continual.hpp"
#include "fedphish/dataset.hpp"
#include "fedphish/federated.hpp"
#include "fedphish/model.hpp"
#include "fedphish/report.hpp"

namespace fedphish {

/// Full experiment description. Defaults reproduce the reference setup:
/// 20 rounds, 3 nodes, 4 streams, 10 local epochs, lr 0.001, batch 16.
struct ExperimentConfig {
    std::string dataset_path; // ignored when synthetic_count > 0
    bool raw_urls = false;    // force raw-URL ingestion (otherwise auto-detected)
    int synthetic_count = 0;  // > 0: use the built-in generator instead of a file

    std::vector<ModelKind> models = {ModelKind::SimpleMLP, ModelKind::DeepMLP,
                                     ModelKind::SimpleRNN, ModelKind::AttentionClassifier};
    std::vector<StrategyKind> strategies = {StrategyKind::Naive, StrategyKind::Cumulative,
                                            StrategyKind::Replay, StrategyKind::LwF,
                                            StrategyKind::MIR};
    StrategyConfig strategy_defaults; // hyperparameters shared by every strategy cell

    int rounds = 20;
    int nodes = 3;
    int streams = 4;
    int local_epochs = 10;
    int batch_size = 16;
    double lr = 0.001;
    PartitionMode partition = PartitionMode::Shuffled;
    AggregationWindow window = AggregationWindow::Lifetime;
    bool normalize = true;
    ModelConfig model_config; // input_dim is overwritten from the data
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::uint64_t seed = 42;

    std::string out_dir; // empty: no files written
    std::vector<std::string> formats = {"csv", "json", "markdown"};
};

std::vector<ModelKind> parse_model_list(const std::string& spec);       // "all" or csv names
std::vector<StrategyKind> parse_strategy_list(const std::string& spec); // "all" or csv names
std::vector<std::string> parse_format_list(const std::string& spec);    // subset of csv,json,markdown

/// Read an ExperimentConfig from a JSON file whose keys mirror the CLI flag
/// names (see README). Missing keys keep their defaults.
ExperimentConfig load_experiment_config(const std::string& path);

/// The staged data that every (model, strategy) cell shares.
struct PreparedData {
    std::vector<StreamData> streams; // shards + test folds, normalized when asked
    NormStats stats;                 // frozen from the first stream's train fold
    std::int64_t width = 0;
    std::vector<std::string> feature_names;
};

/// load -> balance -> partition -> per-stream split -> freeze stats on the
/// first stream's train fold -> standardize every fold -> shard train folds.
PreparedData prepare_data(const ExperimentConfig& cfg);

/// Runs the full (model x strategy) grid over the prepared data and emits
/// reports when an output directory is configured. Deterministic per seed
/// up to wall-clock fields, which are confined to timings.json.
RunReport run_experiment(const ExperimentConfig& cfg);

} // namespace fedphish

#endif
