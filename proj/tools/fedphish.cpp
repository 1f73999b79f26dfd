#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fedphish/continual.hpp"
#include "fedphish/dataset.hpp"
#include "fedphish/errors.hpp"
#include "fedphish/experiment.hpp"
#include "fedphish/gradsuite.hpp"
#include "fedphish/model.hpp"
#include "fedphish/params.hpp"
#include "fedphish/report.hpp"

using namespace fedphish;

namespace {

struct RunFlags {
    std::string config_path;
    std::string dataset;
    bool raw_urls = false;
    int synthetic = 0;
    std::string models = "all";
    std::string strategies = "all";
    int rounds = 20;
    int nodes = 3;
    int streams = 4;
    int local_epochs = 10;
    int batch_size = 16;
    double lr = 0.001;
    std::string partition = "shuffled";
    std::string window = "cumulative";
    std::string attn_tokens = "single";
    bool no_normalize = false;
    std::uint64_t seed = 42;
    std::string out;
    std::string format = "csv,json,markdown";
    int hidden_dim = 64;
    int num_layers = 2;
    int num_heads = 4;
    double dropout = 0.2;
    int replay_buffer = 500;
    double replay_ratio = 1.0;
    double lwf_lambda = 1.0;
    double lwf_temperature = 2.0;
    int mir_candidates = 50;
    int mir_retrieve = 0;
};

// Config file first, then every flag actually given on the command line.
ExperimentConfig build_run_config(const CLI::App& cmd, const RunFlags& f) {
    ExperimentConfig cfg;
    if (!f.config_path.empty()) cfg = load_experiment_config(f.config_path);

    const auto given = [&](const char* name) { return cmd.count(name) > 0; };

    if (given("--dataset")) cfg.dataset_path = f.dataset;
    if (given("--raw-urls")) cfg.raw_urls = f.raw_urls;
    if (given("--synthetic")) cfg.synthetic_count = f.synthetic;
    if (given("--models")) cfg.models = parse_model_list(f.models);
    if (given("--strategies")) cfg.strategies = parse_strategy_list(f.strategies);
    if (given("--rounds")) cfg.rounds = f.rounds;
    if (given("--nodes")) cfg.nodes = f.nodes;
    if (given("--streams")) cfg.streams = f.streams;
    if (given("--local-epochs")) cfg.local_epochs = f.local_epochs;
    if (given("--batch-size")) cfg.batch_size = f.batch_size;
    if (given("--lr")) cfg.lr = f.lr;
    if (given("--partition")) cfg.partition = parse_partition_mode(f.partition);
    if (given("--window")) cfg.window = parse_window(f.window);
    if (given("--attn-tokens")) cfg.model_config.attn_tokens = parse_attn_tokens(f.attn_tokens);
    if (given("--no-normalize")) cfg.normalize = false;
    if (given("--seed")) cfg.seed = f.seed;
    if (given("--out")) cfg.out_dir = f.out;
    if (given("--format")) cfg.formats = parse_format_list(f.format);
    if (given("--hidden-dim")) cfg.model_config.hidden_dim = f.hidden_dim;
    if (given("--num-layers")) cfg.model_config.num_layers = f.num_layers;
    if (given("--num-heads")) cfg.model_config.num_heads = f.num_heads;
    if (given("--dropout")) cfg.model_config.dropout_rate = f.dropout;
    if (given("--replay-buffer")) cfg.strategy_defaults.buffer_capacity = f.replay_buffer;
    if (given("--replay-ratio")) cfg.strategy_defaults.replay_ratio = f.replay_ratio;
    if (given("--lwf-lambda")) cfg.strategy_defaults.lambda = f.lwf_lambda;
    if (given("--lwf-temperature")) cfg.strategy_defaults.temperature = f.lwf_temperature;
    if (given("--mir-candidates")) cfg.strategy_defaults.candidate_count = f.mir_candidates;
    if (given("--mir-retrieve")) cfg.strategy_defaults.retrieve_count = f.mir_retrieve;
    return cfg;
}

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

int cmd_run(const CLI::App& cmd, const RunFlags& f) {
    ExperimentConfig cfg = build_run_config(cmd, f);
    if (cfg.synthetic_count > 0 && !cfg.dataset_path.empty())
        throw ConfigError("config: give either --dataset or --synthetic, not both");

    const RunReport report = run_experiment(cfg);

    for (const CellResult& cell : report.cells) {
        const Metrics& m = cell.sim.final_union;
        std::cout << model_kind_name(cell.model) << " + " << strategy_kind_name(cell.strategy)
                  << ": accuracy " << fixed4(m.accuracy) << ", f1 " << fixed4(m.f1) << "\n";
    }
    if (!cfg.out_dir.empty()) std::cout << "reports written to " << cfg.out_dir << "\n";
    return 0;
}

int cmd_features(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open url file '" + path + "'");
    const std::vector<std::string>& names = canonical_feature_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        std::cout << (i ? "," : "") << names[i];
    std::cout << "\n";

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> feats;
        try {
            feats = extract_features(line);
        } catch (const DataError& e) {
            throw DataError("'" + path + "' line " + std::to_string(line_no) + ": " + e.what());
        }
        for (std::size_t i = 0; i < feats.size(); ++i)
            std::cout << (i ? "," : "") << format_double(feats[i]);
        std::cout << "\n";
    }
    return 0;
}

int cmd_correlate(const std::string& path, bool raw_urls) {
    const Dataset ds =
        (raw_urls || csv_has_url_header(path)) ? load_url_csv(path) : load_csv(path);
    std::cout << "feature,r,constant\n";
    for (const CorrelationEntry& entry : correlation_report(ds))
        std::cout << entry.feature << "," << format_double(entry.r) << ","
                  << (entry.constant ? 1 : 0) << "\n";
    return 0;
}

int cmd_gradcheck(int seeds, std::uint64_t seed, double threshold) {
    const GradcheckReport report = run_model_gradcheck(seeds, seed, &std::cout);
    const bool ok = report.pass(threshold);
    std::cout << "worst " << format_double(report.worst) << " over " << report.cases.size()
              << " cases: " << (ok ? "PASS" : "FAIL") << "\n";
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated continual phishing-detection simulator"};
    app.set_version_flag("--version", std::string(kVersionString));
    app.require_subcommand(1);

    RunFlags rf;
    CLI::App* run = app.add_subcommand("run", "run the model x strategy grid, write reports");
    run->add_option("--config", rf.config_path, "JSON config file; explicit flags override it");
    run->add_option("--dataset", rf.dataset, "input CSV (numeric features, or url,label rows)");
    run->add_flag("--raw-urls", rf.raw_urls, "treat the dataset as url,label rows");
    run->add_option("--synthetic", rf.synthetic, "generate N synthetic URLs instead of reading a file");
    run->add_option("--models", rf.models, "'all' or comma list of mlp,deep-mlp,rnn,attention");
    run->add_option("--strategies", rf.strategies,
                    "'all' or comma list of naive,cumulative,replay,lwf,mir");
    run->add_option("--rounds", rf.rounds, "federated rounds");
    run->add_option("--nodes", rf.nodes, "nodes trained per round");
    run->add_option("--streams", rf.streams, "experience streams");
    run->add_option("--local-epochs", rf.local_epochs, "local epochs per node round");
    run->add_option("--batch-size", rf.batch_size, "minibatch size");
    run->add_option("--lr", rf.lr, "learning rate");
    run->add_option("--partition", rf.partition, "stream partition: shuffled or drift");
    run->add_option("--window", rf.window, "aggregation window: cumulative or per-round");
    run->add_option("--attn-tokens", rf.attn_tokens, "attention token mode: single or features");
    run->add_flag("--no-normalize", rf.no_normalize, "skip feature standardization");
    run->add_option("--seed", rf.seed, "master seed");
    run->add_option("--out", rf.out, "directory for report files");
    run->add_option("--format", rf.format, "comma list of csv,json,markdown");
    run->add_option("--hidden-dim", rf.hidden_dim, "attention hidden width");
    run->add_option("--num-layers", rf.num_layers, "attention encoder layers");
    run->add_option("--num-heads", rf.num_heads, "attention heads");
    run->add_option("--dropout", rf.dropout, "attention dropout rate");
    run->add_option("--replay-buffer", rf.replay_buffer, "replay/mir buffer capacity");
    run->add_option("--replay-ratio", rf.replay_ratio, "replayed rows per batch, as a ratio");
    run->add_option("--lwf-lambda", rf.lwf_lambda, "distillation weight");
    run->add_option("--lwf-temperature", rf.lwf_temperature, "distillation temperature");
    run->add_option("--mir-candidates", rf.mir_candidates, "mir candidate draws per batch");
    run->add_option("--mir-retrieve", rf.mir_retrieve, "mir rows kept per batch (0: batch size)");

    std::string url_file;
    CLI::App* features = app.add_subcommand("features", "print the feature CSV for a URL file");
    features->add_option("url-file", url_file, "text file, one URL per line")->required();

    std::string corr_dataset;
    bool corr_raw = false;
    CLI::App* correlate =
        app.add_subcommand("correlate", "print per-feature label correlations as CSV");
    correlate->add_option("--dataset", corr_dataset, "input CSV")->required();
    correlate->add_flag("--raw-urls", corr_raw, "treat the dataset as url,label rows");

    int gc_seeds = 20;
    std::uint64_t gc_seed = 42;
    double gc_threshold = 1e-4;
    CLI::App* gradcheck =
        app.add_subcommand("gradcheck", "check model gradients against central differences");
    gradcheck->add_option("--seeds", gc_seeds, "randomized sweeps per model kind");
    gradcheck->add_option("--seed", gc_seed, "base seed");
    gradcheck->add_option("--threshold", gc_threshold, "max relative error allowed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (run->parsed()) return cmd_run(*run, rf);
        if (features->parsed()) return cmd_features(url_file);
        if (correlate->parsed()) return cmd_correlate(corr_dataset, corr_raw);
        if (gradcheck->parsed()) return cmd_gradcheck(gc_seeds, gc_seed, gc_threshold);
    } catch (const std::exception& e) {
        std::cerr << "fedphish: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
