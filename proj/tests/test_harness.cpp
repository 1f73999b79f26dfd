#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedphish/errors.hpp"
#include "fedphish/experiment.hpp"
#include "fedphish/metrics.hpp"
#include "fedphish/report.hpp"
#include "fedphish/rng.hpp"

using namespace fedphish;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << content;
    return path;
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

// Small but real run to feed the report writers.
RunReport tiny_report() {
    ExperimentConfig cfg;
    cfg.synthetic_count = 120;
    cfg.models = {ModelKind::SimpleMLP};
    cfg.strategies = {StrategyKind::Naive, StrategyKind::Replay};
    cfg.rounds = 2;
    cfg.nodes = 2;
    cfg.streams = 2;
    cfg.local_epochs = 1;
    cfg.batch_size = 16;
    cfg.seed = 7;
    return run_experiment(cfg);
}

} // namespace

TEST_CASE("metric rates from a hand confusion matrix") {
    Metrics m = metrics_from_counts(3, 1, 5, 1);
    CHECK(m.accuracy == doctest::Approx(0.8));
    CHECK(m.precision == doctest::Approx(0.75));
    CHECK(m.recall == doctest::Approx(0.75));
    CHECK(m.f1 == doctest::Approx(0.75));
    CHECK(m.accuracy_defined);
    CHECK(m.precision_defined);
    CHECK(m.recall_defined);
    CHECK(m.f1_defined);
    CHECK(m.total() == 10);
}

TEST_CASE("zero denominators report 0 with the flag cleared") {
    Metrics empty = metrics_from_counts(0, 0, 0, 0);
    CHECK_FALSE(empty.accuracy_defined);
    CHECK_FALSE(empty.precision_defined);
    CHECK_FALSE(empty.recall_defined);
    CHECK_FALSE(empty.f1_defined);
    CHECK(empty.f1 == 0.0);

    // all-negative test set, classifier never fires
    Metrics quiet = metrics_from_counts(0, 0, 5, 0);
    CHECK(quiet.accuracy == doctest::Approx(1.0));
    CHECK(quiet.accuracy_defined);
    CHECK_FALSE(quiet.precision_defined);
    CHECK_FALSE(quiet.recall_defined);
    CHECK_FALSE(quiet.f1_defined);

    CHECK_THROWS_AS(metrics_from_counts(-1, 0, 0, 0), UsageError);
    CHECK_THROWS_AS(metrics_from_counts(0, 0, -2, 0), UsageError);
}

TEST_CASE("f1 equals the harmonic mean of precision and recall") {
    RngStream rng(31);
    for (int i = 0; i < 1000; ++i) {
        const std::int64_t tp = 1 + static_cast<std::int64_t>(rng.uniform_int(50));
        const std::int64_t fp = static_cast<std::int64_t>(rng.uniform_int(50));
        const std::int64_t tn = static_cast<std::int64_t>(rng.uniform_int(50));
        const std::int64_t fn = static_cast<std::int64_t>(rng.uniform_int(50));
        Metrics m = metrics_from_counts(tp, fp, tn, fn);
        const double harmonic = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        CHECK(m.f1 == doctest::Approx(harmonic).epsilon(1e-12));
        CHECK(m.f1 == doctest::Approx(2.0 * static_cast<double>(tp) /
                                      static_cast<double>(2 * tp + fp + fn))
                          .epsilon(1e-15));
    }
}

TEST_CASE("prediction counting") {
    Metrics m = compute_metrics({1, 1, 0, 0, 1}, {1, 0, 0, 1, 1});
    CHECK(m.tp == 2);
    CHECK(m.fp == 1);
    CHECK(m.tn == 1);
    CHECK(m.fn == 1);

    CHECK_THROWS_AS(compute_metrics({1, 0}, {1}), UsageError);
    CHECK_THROWS_AS(compute_metrics({}, {}), UsageError);
    CHECK_THROWS_AS(compute_metrics({2}, {1}), UsageError);
    CHECK_THROWS_AS(compute_metrics({0}, {-1}), UsageError);
}

TEST_CASE("model and strategy list parsing") {
    CHECK(parse_model_list("all") ==
          std::vector<ModelKind>{ModelKind::SimpleMLP, ModelKind::DeepMLP, ModelKind::SimpleRNN,
                                 ModelKind::AttentionClassifier});
    CHECK(parse_model_list("attention,mlp") ==
          std::vector<ModelKind>{ModelKind::AttentionClassifier, ModelKind::SimpleMLP});
    CHECK_THROWS_AS(parse_model_list("mlp,mlp"), ConfigError);
    CHECK_THROWS_AS(parse_model_list("cnn"), ConfigError);
    CHECK_THROWS_AS(parse_model_list("mlp,,rnn"), ConfigError);

    CHECK(parse_strategy_list("all").size() == 5);
    CHECK(parse_strategy_list("lwf,naive") ==
          std::vector<StrategyKind>{StrategyKind::LwF, StrategyKind::Naive});
    CHECK_THROWS_AS(parse_strategy_list("naive,naive"), ConfigError);

    CHECK(parse_format_list("csv,markdown") == std::vector<std::string>{"csv", "markdown"});
    CHECK_THROWS_AS(parse_format_list("yaml"), ConfigError);
    CHECK_THROWS_AS(parse_format_list("csv,csv"), ConfigError);
}

TEST_CASE("config files mirror the CLI flags") {
    const std::string path = write_temp("fedphish_cfg.json", R"({
        "synthetic": 500,
        "models": "mlp,rnn",
        "strategies": "naive,lwf",
        "rounds": 8,
        "nodes": 2,
        "streams": 4,
        "local-epochs": 3,
        "batch-size": 32,
        "lr": 0.005,
        "partition": "drift",
        "window": "per-round",
        "normalize": false,
        "seed": 99,
        "format": "json",
        "hidden-dim": 96,
        "lwf-lambda": 0.5,
        "replay-buffer": 64
    })");
    ExperimentConfig cfg = load_experiment_config(path);
    CHECK(cfg.synthetic_count == 500);
    CHECK(cfg.models == std::vector<ModelKind>{ModelKind::SimpleMLP, ModelKind::SimpleRNN});
    CHECK(cfg.strategies == std::vector<StrategyKind>{StrategyKind::Naive, StrategyKind::LwF});
    CHECK(cfg.rounds == 8);
    CHECK(cfg.nodes == 2);
    CHECK(cfg.local_epochs == 3);
    CHECK(cfg.batch_size == 32);
    CHECK(cfg.lr == doctest::Approx(0.005));
    CHECK(cfg.partition == PartitionMode::Drift);
    CHECK(cfg.window == AggregationWindow::PerRound);
    CHECK_FALSE(cfg.normalize);
    CHECK(cfg.seed == 99);
    CHECK(cfg.formats == std::vector<std::string>{"json"});
    CHECK(cfg.model_config.hidden_dim == 96);
    CHECK(cfg.strategy_defaults.lambda == doctest::Approx(0.5));
    CHECK(cfg.strategy_defaults.buffer_capacity == 64);

    CHECK_THROWS_AS(load_experiment_config(write_temp("bad1.json", R"({"burger": 1})")),
                    ConfigError);
    CHECK_THROWS_AS(load_experiment_config(write_temp("bad2.json", R"([1,2])")), ConfigError);
    CHECK_THROWS_AS(load_experiment_config(write_temp("bad3.json", R"({"rounds": "soon"})")),
                    ConfigError);
    CHECK_THROWS_AS(load_experiment_config(write_temp("bad4.json", "{not json")), ConfigError);
    CHECK_THROWS_AS(load_experiment_config("/nonexistent/cfg.json"), IoError);
}

TEST_CASE("prepared data has the expected geometry") {
    ExperimentConfig cfg;
    cfg.synthetic_count = 300;
    cfg.streams = 3;
    cfg.nodes = 2;
    cfg.seed = 5;
    PreparedData prep = prepare_data(cfg);

    REQUIRE(prep.streams.size() == 3);
    CHECK(prep.width == 19);
    CHECK(prep.feature_names.size() == 19);
    CHECK(prep.stats.width() == 19);
    for (const StreamData& sd : prep.streams) {
        REQUIRE(sd.node_shards.size() == 2);
        for (const Dataset& shard : sd.node_shards) CHECK(!shard.records.empty());
        CHECK(!sd.test_fold.records.empty());
    }

    // standardization centers features; raw length counts are non-negative
    ExperimentConfig raw_cfg = cfg;
    raw_cfg.normalize = false;
    PreparedData raw = prepare_data(raw_cfg);
    bool raw_negative = false, norm_negative = false;
    for (const auto& r : raw.streams[0].node_shards[0].records)
        raw_negative = raw_negative || r.features[0] < 0.0;
    for (const auto& r : prep.streams[0].node_shards[0].records)
        norm_negative = norm_negative || r.features[0] < 0.0;
    CHECK_FALSE(raw_negative);
    CHECK(norm_negative);

    ExperimentConfig no_data;
    CHECK_THROWS_AS(prepare_data(no_data), ConfigError); // neither file nor synthetic
}

TEST_CASE("csv report carries one row per cell round stream plus finals") {
    RunReport report = tiny_report();
    REQUIRE(report.cells.size() == 2);

    std::ostringstream os;
    write_csv(os, report);
    const std::string csv = os.str();

    // header + 2 cells * (2 rounds * 2 streams) + 2 final rows
    CHECK(count_lines(csv) == 1 + 2 * 4 + 2);
    CHECK(csv.rfind("model,strategy,round,stream,active_stream,accuracy,", 0) == 0);
    CHECK(csv.find("mlp,naive,1,1,1,") != std::string::npos);
    CHECK(csv.find("mlp,replay,2,2,2,") != std::string::npos);
    CHECK(csv.find("mlp,naive,final,union,,") != std::string::npos);
    CHECK(csv.find("mlp,replay,final,union,,") != std::string::npos);
}

TEST_CASE("json report structure") {
    RunReport report = tiny_report();
    std::ostringstream os;
    write_json(os, report);
    nlohmann::json j = nlohmann::json::parse(os.str());

    CHECK(j["version"] == kVersionString);
    CHECK(j["config"]["dataset"] == "synthetic");
    CHECK(j["config"]["rounds"] == 2);
    CHECK(j["config"]["models"] == nlohmann::json::array({"mlp"}));
    CHECK(j["config"]["strategies"] == nlohmann::json::array({"naive", "replay"}));
    CHECK(j.count("total_wall_seconds") == 0); // wall clock is confined to timings.json

    REQUIRE(j["cells"].size() == 2);
    const auto& cell = j["cells"][0];
    CHECK(cell["model"] == "mlp");
    CHECK(cell["strategy"] == "naive");
    REQUIRE(cell["history"].size() == 2);
    CHECK(cell["history"][0]["round"] == 1);
    CHECK(cell["history"][0]["streams"].size() == 2);
    const auto& m = cell["final"];
    CHECK(m.count("accuracy") == 1);
    CHECK(m.count("undefined") == 1);
    const double acc = m["accuracy"].get<double>();
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
}

TEST_CASE("markdown report presents one table per strategy") {
    RunReport report = tiny_report();
    std::ostringstream os;
    write_markdown(os, report);
    const std::string md = os.str();

    CHECK(md.rfind("# Federated continual learning results", 0) == 0);
    const std::size_t naive_at = md.find("## Results under Naive Strategy");
    const std::size_t replay_at = md.find("## Results under Replay Strategy");
    REQUIRE(naive_at != std::string::npos);
    REQUIRE(replay_at != std::string::npos);
    CHECK(naive_at < replay_at); // request order
    CHECK(md.find("| Model | Accuracy | Precision | Recall | F1-Score |") != std::string::npos);
    CHECK(md.find("| Simple MLP | 0.") != std::string::npos); // two-decimal cells
    CHECK(md.find("- dataset: synthetic") != std::string::npos);
}

TEST_CASE("emit_report writes the requested files plus timings") {
    RunReport report = tiny_report();
    const std::string dir =
        (std::filesystem::temp_directory_path() / "fedphish_report_test").string();
    std::filesystem::remove_all(dir);

    std::vector<std::string> written = emit_report(report, dir, {"csv", "markdown"});
    REQUIRE(written.size() == 3); // csv, md, timings
    CHECK(std::filesystem::exists(dir + "/report.csv"));
    CHECK(std::filesystem::exists(dir + "/report.md"));
    CHECK(std::filesystem::exists(dir + "/timings.json"));
    CHECK_FALSE(std::filesystem::exists(dir + "/report.json"));

    nlohmann::json timings = nlohmann::json::parse(slurp(dir + "/timings.json"));
    CHECK(timings["cells"].size() == 2);
    CHECK(timings["total_seconds"].get<double>() >= 0.0);

    CHECK(emit_report(report, dir, {}).empty());
    CHECK_THROWS_AS(emit_report(report, dir, {"yaml"}), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("experiment reruns produce byte-identical reports") {
    ExperimentConfig cfg;
    cfg.synthetic_count = 120;
    cfg.models = {ModelKind::SimpleMLP};
    cfg.strategies = {StrategyKind::Naive};
    cfg.rounds = 2;
    cfg.nodes = 2;
    cfg.streams = 2;
    cfg.local_epochs = 1;
    cfg.batch_size = 16;
    cfg.seed = 13;
    cfg.formats = {"csv", "json"};

    const std::string dir_a =
        (std::filesystem::temp_directory_path() / "fedphish_rerun_a").string();
    const std::string dir_b =
        (std::filesystem::temp_directory_path() / "fedphish_rerun_b").string();
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);

    cfg.out_dir = dir_a;
    RunReport a = run_experiment(cfg);
    cfg.out_dir = dir_b;
    RunReport b = run_experiment(cfg);

    REQUIRE(a.cells.size() == 1);
    CHECK(a.cells[0].sim.history.size() == 2);
    CHECK(slurp(dir_a + "/report.csv") == slurp(dir_b + "/report.csv"));
    CHECK(slurp(dir_a + "/report.json") == slurp(dir_b + "/report.json"));
    CHECK(a.cells[0].sim.final_params.max_abs_difference(b.cells[0].sim.final_params) == 0.0);

    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
}

TEST_CASE("experiment config is validated before any training") {
    ExperimentConfig cfg;
    cfg.synthetic_count = 120;
    cfg.models = {};
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);

    cfg.models = {ModelKind::SimpleMLP};
    cfg.strategies = {};
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);

    cfg.strategies = {StrategyKind::LwF};
    cfg.strategy_defaults.temperature = 0.0;
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}
