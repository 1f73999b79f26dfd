#include "fedphish/experiment.hpp"

#include <chrono>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "fedphish/errors.hpp"
#include "fedphish/synth.hpp"

namespace fedphish {

namespace {

// Rethrows any library error with the pipeline stage prefixed, preserving
// the exception type so callers can still dispatch on it.
template <typename Fn>
decltype(auto) with_stage(const std::string& stage, Fn&& fn) {
    try {
        return std::forward<Fn>(fn)();
    } catch (const DimensionError& e) {
        throw DimensionError(stage + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(stage + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(stage + ": " + e.what());
    } catch (const ProtocolError& e) {
        throw ProtocolError(stage + ": " + e.what());
    } catch (const UsageError& e) {
        throw UsageError(stage + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(stage + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(stage + ": " + e.what());
    }
}

std::vector<std::string> split_commas(const std::string& spec) {
    std::vector<std::string> out;
    std::string token;
    std::istringstream in(spec);
    while (std::getline(in, token, ',')) {
        const std::size_t first = token.find_first_not_of(" \t");
        if (first == std::string::npos) throw ConfigError("empty entry in list '" + spec + "'");
        const std::size_t last = token.find_last_not_of(" \t");
        out.push_back(token.substr(first, last - first + 1));
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

ConfigEcho echo_config(const ExperimentConfig& cfg) {
    ConfigEcho echo;
    echo.dataset = cfg.synthetic_count > 0 ? "synthetic" : cfg.dataset_path;
    echo.synthetic_count = cfg.synthetic_count;
    echo.raw_urls = cfg.raw_urls;
    for (ModelKind m : cfg.models) echo.models.push_back(model_kind_name(m));
    for (StrategyKind s : cfg.strategies) echo.strategies.push_back(strategy_kind_name(s));
    echo.rounds = cfg.rounds;
    echo.nodes = cfg.nodes;
    echo.streams = cfg.streams;
    echo.local_epochs = cfg.local_epochs;
    echo.batch_size = cfg.batch_size;
    echo.lr = cfg.lr;
    echo.partition = partition_mode_name(cfg.partition);
    echo.window = window_name(cfg.window);
    echo.attn_tokens = attn_tokens_name(cfg.model_config.attn_tokens);
    echo.normalize = cfg.normalize;
    echo.seed = cfg.seed;
    return echo;
}

} // namespace

std::vector<ModelKind> parse_model_list(const std::string& spec) {
    if (spec == "all")
        return {ModelKind::SimpleMLP, ModelKind::DeepMLP, ModelKind::SimpleRNN,
                ModelKind::AttentionClassifier};
    std::vector<ModelKind> out;
    for (const std::string& name : split_commas(spec)) {
        const ModelKind kind = parse_model_kind(name);
        for (ModelKind seen : out)
            if (seen == kind) throw ConfigError("model '" + name + "' listed twice");
        out.push_back(kind);
    }
    return out;
}

std::vector<StrategyKind> parse_strategy_list(const std::string& spec) {
    if (spec == "all")
        return {StrategyKind::Naive, StrategyKind::Cumulative, StrategyKind::Replay,
                StrategyKind::LwF, StrategyKind::MIR};
    std::vector<StrategyKind> out;
    for (const std::string& name : split_commas(spec)) {
        const StrategyKind kind = parse_strategy_kind(name);
        for (StrategyKind seen : out)
            if (seen == kind) throw ConfigError("strategy '" + name + "' listed twice");
        out.push_back(kind);
    }
    return out;
}

std::vector<std::string> parse_format_list(const std::string& spec) {
    std::vector<std::string> out;
    for (const std::string& name : split_commas(spec)) {
        if (name != "csv" && name != "json" && name != "markdown")
            throw ConfigError("unknown report format '" + name +
                              "' (expected csv, json or markdown)");
        for (const std::string& seen : out)
            if (seen == name) throw ConfigError("format '" + name + "' listed twice");
        out.push_back(name);
    }
    return out;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file '" + path + "': expected a JSON object");

    ExperimentConfig cfg;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "dataset") cfg.dataset_path = value.get<std::string>();
            else if (key == "raw-urls") cfg.raw_urls = value.get<bool>();
            else if (key == "synthetic") cfg.synthetic_count = value.get<int>();
            else if (key == "models") cfg.models = parse_model_list(value.get<std::string>());
            else if (key == "strategies")
                cfg.strategies = parse_strategy_list(value.get<std::string>());
            else if (key == "rounds") cfg.rounds = value.get<int>();
            else if (key == "nodes") cfg.nodes = value.get<int>();
            else if (key == "streams") cfg.streams = value.get<int>();
            else if (key == "local-epochs") cfg.local_epochs = value.get<int>();
            else if (key == "batch-size") cfg.batch_size = value.get<int>();
            else if (key == "lr") cfg.lr = value.get<double>();
            else if (key == "partition")
                cfg.partition = parse_partition_mode(value.get<std::string>());
            else if (key == "window") cfg.window = parse_window(value.get<std::string>());
            else if (key == "attn-tokens")
                cfg.model_config.attn_tokens = parse_attn_tokens(value.get<std::string>());
            else if (key == "normalize") cfg.normalize = value.get<bool>();
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "out") cfg.out_dir = value.get<std::string>();
            else if (key == "format") cfg.formats = parse_format_list(value.get<std::string>());
            else if (key == "hidden-dim") cfg.model_config.hidden_dim = value.get<int>();
            else if (key == "num-layers") cfg.model_config.num_layers = value.get<int>();
            else if (key == "num-heads") cfg.model_config.num_heads = value.get<int>();
            else if (key == "dropout") cfg.model_config.dropout_rate = value.get<double>();
            else if (key == "replay-buffer")
                cfg.strategy_defaults.buffer_capacity = value.get<int>();
            else if (key == "replay-ratio") cfg.strategy_defaults.replay_ratio = value.get<double>();
            else if (key == "lwf-lambda") cfg.strategy_defaults.lambda = value.get<double>();
            else if (key == "lwf-temperature")
                cfg.strategy_defaults.temperature = value.get<double>();
            else if (key == "mir-candidates")
                cfg.strategy_defaults.candidate_count = value.get<int>();
            else if (key == "mir-retrieve") cfg.strategy_defaults.retrieve_count = value.get<int>();
            else throw ConfigError("config file '" + path + "': unknown key '" + key + "'");
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config file '" + path + "', key '" + key + "': " + e.what());
        }
    }
    return cfg;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
    const Dataset raw = with_stage("load", [&]() -> Dataset {
        if (cfg.synthetic_count > 0)
            return synth_dataset(cfg.synthetic_count, derive_seed(cfg.seed, "synth-data"));
        if (cfg.dataset_path.empty())
            throw ConfigError("no input: give a dataset path or a synthetic record count");
        if (cfg.raw_urls || csv_has_url_header(cfg.dataset_path))
            return load_url_csv(cfg.dataset_path);
        return load_csv(cfg.dataset_path);
    });

    const Dataset balanced =
        with_stage("balance", [&] { return undersample_balance(raw, cfg.seed); });

    StreamPartition part = with_stage("partition", [&] {
        return partition_streams(balanced, cfg.streams, cfg.partition, cfg.seed);
    });

    PreparedData prep;
    prep.width = balanced.width();
    prep.feature_names = balanced.feature_names;

    std::vector<TrainTestSplit> splits;
    splits.reserve(part.streams.size());
    for (std::size_t i = 0; i < part.streams.size(); ++i)
        splits.push_back(with_stage("split", [&] {
            return train_test_split(part.streams[i], derive_seed(cfg.seed, "stream", i));
        }));

    if (cfg.normalize) {
        // Stats frozen on the first stream's train fold keep later streams
        // and every test fold out of the fitting data.
        with_stage("normalize", [&] {
            prep.stats = compute_norm_stats(splits.front().train);
            for (TrainTestSplit& split : splits) {
                split.train = standardize(split.train, prep.stats);
                split.test = standardize(split.test, prep.stats);
            }
        });
    }

    for (std::size_t i = 0; i < splits.size(); ++i) {
        StreamData sd;
        sd.node_shards = with_stage("shard", [&] {
            return shard_for_nodes(splits[i].train, cfg.nodes, derive_seed(cfg.seed, "stream", i));
        });
        sd.test_fold = std::move(splits[i].test);
        prep.streams.push_back(std::move(sd));
    }
    return prep;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();

    with_stage("config", [&] {
        if (cfg.models.empty()) throw ConfigError("no models selected");
        if (cfg.strategies.empty()) throw ConfigError("no strategies selected");
        StrategyConfig probe = cfg.strategy_defaults;
        for (StrategyKind kind : cfg.strategies) {
            probe.kind = kind;
            validate_strategy_config(probe);
        }
    });

    const PreparedData prep = prepare_data(cfg);

    RunReport report;
    report.config = echo_config(cfg);
    report.cells.reserve(cfg.models.size() * cfg.strategies.size());

    for (ModelKind model : cfg.models) {
        for (StrategyKind strategy : cfg.strategies) {
            const std::string cell = model_kind_name(model) + ":" + strategy_kind_name(strategy);
            const auto c0 = clock::now();

            SimulationConfig sim;
            sim.rounds = cfg.rounds;
            sim.nodes = cfg.nodes;
            sim.streams = cfg.streams;
            sim.local_epochs = cfg.local_epochs;
            sim.batch_size = cfg.batch_size;
            sim.lr = cfg.lr;
            sim.model_kind = model;
            sim.model_config = cfg.model_config;
            sim.model_config.input_dim = static_cast<int>(prep.width);
            sim.strategy = cfg.strategy_defaults;
            sim.strategy.kind = strategy;
            sim.optimizer = cfg.optimizer;
            sim.window = cfg.window;
            sim.seed = derive_seed(cfg.seed, "cell:" + cell);

            CellResult result;
            result.model = model;
            result.strategy = strategy;
            result.sim =
                with_stage("cell " + cell, [&] { return run_simulation(sim, prep.streams); });
            result.wall_seconds = std::chrono::duration<double>(clock::now() - c0).count();
            report.cells.push_back(std::move(result));
        }
    }

    report.total_wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();

    if (!cfg.out_dir.empty())
        with_stage("report", [&] { emit_report(report, cfg.out_dir, cfg.formats); });

    return report;
}

} // namespace fedphish
