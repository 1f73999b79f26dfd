#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fedphish/errors.hpp"
#include "fedphish/federated.hpp"
#include "fedphish/rng.hpp"

using namespace fedphish;

namespace {

ParamSet params2(double a, double b) {
    ParamSet p;
    p.add("w", Tensor({2}, {a, b}));
    return p;
}

NodeUpdate update(int node_id, std::int64_t n, const ParamSet& params, int round = 1) {
    NodeUpdate u;
    u.node_id = node_id;
    u.sample_count = n;
    u.params = params;
    u.round = round;
    return u;
}

Dataset separable(int n, std::uint64_t seed) {
    RngStream rng(seed);
    Dataset ds;
    ds.feature_names = {"a", "b"};
    ds.source = "toy";
    for (int i = 0; i < n; ++i) {
        const int label = static_cast<int>(rng.uniform_int(2));
        const double x = (label == 1 ? 1.0 : -1.0) + rng.uniform(-0.3, 0.3);
        ds.records.push_back({{x, rng.uniform(-1.0, 1.0)}, label});
    }
    return ds;
}

// Classifier whose logits are (l0, l1) for every two-feature input.
ModelInstance constant_logits(double l0, double l1) {
    ModelConfig cfg;
    cfg.input_dim = 2;
    cfg.mlp_hidden = 2;
    ModelInstance m = build_model(ModelKind::SimpleMLP, cfg, 1);
    auto& w1 = m.params.at("fc1.w").values();
    std::fill(w1.begin(), w1.end(), 0.0);
    m.params.at("fc1.b") = Tensor({2}, {1.0, 0.0});
    m.params.at("fc2.w") = Tensor::matrix(2, 2, {l0, l1, 0.0, 0.0});
    m.params.at("fc2.b") = Tensor({2}, {0.0, 0.0});
    return m;
}

std::vector<StreamData> toy_streams(int streams, int nodes, int shard_size, std::uint64_t seed) {
    std::vector<StreamData> out;
    for (int s = 0; s < streams; ++s) {
        StreamData sd;
        for (int k = 0; k < nodes; ++k)
            sd.node_shards.push_back(separable(
                shard_size, derive_seed(seed, "shard", static_cast<std::uint64_t>(s * 100 + k))));
        sd.test_fold = separable(10, derive_seed(seed, "test", static_cast<std::uint64_t>(s)));
        out.push_back(std::move(sd));
    }
    return out;
}

SimulationConfig toy_sim_config() {
    SimulationConfig cfg;
    cfg.rounds = 4;
    cfg.nodes = 2;
    cfg.streams = 2;
    cfg.local_epochs = 1;
    cfg.batch_size = 8;
    cfg.lr = 0.01;
    cfg.model_kind = ModelKind::SimpleMLP;
    cfg.model_config.input_dim = 2;
    cfg.model_config.mlp_hidden = 4;
    cfg.seed = 42;
    return cfg;
}

} // namespace

TEST_CASE("server computes the sample-weighted running mean") {
    GlobalState server = server_init(params2(0.0, 0.0));
    CHECK(server.n_total == 0);
    CHECK(server.updates_processed == 0);

    server_ingest(server, update(1, 4, params2(1.0, 2.0)));
    CHECK(server.w0.at("w").values() == std::vector<double>{1.0, 2.0});
    CHECK(server.n_total == 4);

    server_ingest(server, update(2, 4, params2(3.0, 6.0)));
    CHECK(server.w0.at("w").values() == std::vector<double>{2.0, 4.0});
    CHECK(server.n_total == 8);
    CHECK(server.updates_processed == 2);
}

TEST_CASE("unequal sample counts weight the mean") {
    // (1*0 + 3*4) / 4 = 3, in either arrival order
    for (bool swap : {false, true}) {
        GlobalState server = server_init(params2(0.0, 0.0));
        std::vector<NodeUpdate> updates = {update(1, 1, params2(0.0, 0.0)),
                                           update(2, 3, params2(4.0, 4.0))};
        if (swap) std::swap(updates[0], updates[1]);
        for (const auto& u : updates) server_ingest(server, u);
        CHECK(server.w0.at("w").at(0, 0) == doctest::Approx(3.0).epsilon(1e-15));
    }
}

TEST_CASE("aggregation is invariant under update reordering") {
    RngStream rng(2024);
    std::vector<NodeUpdate> updates;
    for (int i = 0; i < 8; ++i)
        updates.push_back(update(i + 1, 1 + static_cast<std::int64_t>(rng.uniform_int(20)),
                                 params2(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0))));

    GlobalState reference = server_init(params2(0.0, 0.0));
    for (const auto& u : updates) server_ingest(reference, u);

    for (int perm = 0; perm < 30; ++perm) {
        std::vector<NodeUpdate> shuffled = updates;
        std::vector<std::size_t> order(shuffled.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        GlobalState server = server_init(params2(0.0, 0.0));
        for (std::size_t i : order) server_ingest(server, updates[i]);
        CHECK(server.w0.max_abs_difference(reference.w0) <= 1e-9);
    }
}

TEST_CASE("identical updates are a fixed point") {
    const ParamSet p = params2(0.125, -2.75);
    GlobalState server = server_init(params2(0.0, 0.0));
    for (int i = 1; i <= 5; ++i) server_ingest(server, update(i, 1 << i, p));
    CHECK(server.w0.max_abs_difference(p) <= 1e-12);
}

TEST_CASE("broadcast returns an isolated copy") {
    GlobalState server = server_init(params2(1.0, 1.0));
    server_ingest(server, update(1, 2, params2(5.0, 7.0)));
    ParamSet copy = broadcast_get(server);
    copy.fill(0.0);
    CHECK(server.w0.at("w").values() == std::vector<double>{5.0, 7.0});
}

TEST_CASE("protocol violations are rejected") {
    GlobalState server = server_init(params2(0.0, 0.0));
    CHECK_THROWS_AS(server_ingest(server, update(1, 0, params2(1.0, 1.0))), ProtocolError);
    CHECK_THROWS_AS(server_ingest(server, update(1, -3, params2(1.0, 1.0))), ProtocolError);

    ParamSet wrong;
    wrong.add("w", Tensor({3}, {1.0, 2.0, 3.0}));
    CHECK_THROWS_AS(server_ingest(server, update(1, 2, wrong)), ProtocolError);

    ParamSet renamed;
    renamed.add("v", Tensor({2}, {1.0, 2.0}));
    CHECK_THROWS_AS(server_ingest(server, update(1, 2, renamed)), ProtocolError);

    CHECK(server.updates_processed == 0); // rejected updates leave no trace
    CHECK(server.n_total == 0);
}

TEST_CASE("default schedule spreads rounds over streams") {
    CHECK(default_schedule(20, 4) == std::vector<int>{5, 5, 5, 5});
    CHECK(default_schedule(7, 3) == std::vector<int>{3, 2, 2});
    CHECK(default_schedule(5, 5) == std::vector<int>{1, 1, 1, 1, 1});
    CHECK(default_schedule(9, 1) == std::vector<int>{9});
    CHECK_THROWS_AS(default_schedule(3, 4), ConfigError);
    CHECK_THROWS_AS(default_schedule(4, 0), ConfigError);
}

TEST_CASE("aggregation window parsing") {
    CHECK(parse_window("cumulative") == AggregationWindow::Lifetime);
    CHECK(parse_window("per-round") == AggregationWindow::PerRound);
    CHECK_THROWS_AS(parse_window("sliding"), ConfigError);
    CHECK(window_name(AggregationWindow::Lifetime) == "cumulative");
    CHECK(window_name(AggregationWindow::PerRound) == "per-round");
}

TEST_CASE("node adopts the broadcast weights and reports its shard size") {
    ModelConfig mc;
    mc.input_dim = 2;
    mc.mlp_hidden = 4;
    ModelInstance prototype = build_model(ModelKind::SimpleMLP, mc, 3);

    ParamSet w0 = prototype.params;
    w0.scale(0.5); // distinct from the prototype's own weights

    NodeConfig node;
    node.node_id = 7;
    node.learning_rate = 0.0; // optimizer steps become exact no-ops
    node.local_epochs = 2;
    node.batch_size = 4;

    Dataset shard = separable(10, 91);
    StrategyState state = make_strategy_state(node.strategy, 5);
    NodeUpdate u = node_round(node, prototype, w0, shard, 0, 3, state, 17);

    CHECK(u.node_id == 7);
    CHECK(u.round == 3);
    CHECK(u.sample_count == 10);
    // lr 0 means the returned params are exactly the adopted broadcast
    CHECK(u.params.max_abs_difference(w0) == 0.0);

    Dataset empty;
    CHECK_THROWS_AS(node_round(node, prototype, w0, empty, 0, 1, state, 17), ConfigError);
}

TEST_CASE("evaluation oracle on a rigged constant classifier") {
    // always predicts label 0
    ModelInstance model = constant_logits(3.0, 0.0);
    Dataset test;
    test.feature_names = {"a", "b"};
    for (int i = 0; i < 3; ++i) test.records.push_back({{0.0, 0.0}, 0});
    for (int i = 0; i < 2; ++i) test.records.push_back({{0.0, 0.0}, 1});

    Metrics m = evaluate_model(model, test);
    CHECK(m.tn == 3);
    CHECK(m.fn == 2);
    CHECK(m.tp == 0);
    CHECK(m.fp == 0);
    CHECK(m.accuracy == doctest::Approx(0.6));
    CHECK_FALSE(m.precision_defined); // never predicted positive
    CHECK(m.recall == 0.0);
    CHECK(m.recall_defined);

    Metrics empty = evaluate_model(model, Dataset{});
    CHECK(empty.total() == 0);
    CHECK_FALSE(empty.accuracy_defined);
}

TEST_CASE("simulation history follows the schedule") {
    SimulationConfig cfg = toy_sim_config();
    std::vector<StreamData> streams = toy_streams(2, 2, 8, 7);
    SimulationResult result = run_simulation(cfg, streams);

    REQUIRE(result.history.size() == 4);
    const std::vector<int> expected_active = {1, 1, 2, 2};
    for (std::size_t r = 0; r < result.history.size(); ++r) {
        CHECK(result.history[r].round == static_cast<int>(r + 1));
        CHECK(result.history[r].active_stream == expected_active[r]);
        REQUIRE(result.history[r].per_stream.size() == 2);
        for (const Metrics& m : result.history[r].per_stream) CHECK(m.total() == 10);
    }
    CHECK(result.final_union.total() == 20); // union of both test folds

    // explicit schedule overrides the near-equal default
    cfg.schedule = {1, 3};
    SimulationResult skewed = run_simulation(cfg, streams);
    CHECK(skewed.history[0].active_stream == 1);
    CHECK(skewed.history[1].active_stream == 2);
    CHECK(skewed.history[3].active_stream == 2);
}

TEST_CASE("simulation rejects inconsistent wiring") {
    SimulationConfig cfg = toy_sim_config();
    std::vector<StreamData> streams = toy_streams(2, 2, 8, 7);

    SimulationConfig bad = cfg;
    bad.schedule = {1, 1}; // sums to 2, not 4
    CHECK_THROWS_AS(run_simulation(bad, streams), ConfigError);

    bad = cfg;
    bad.schedule = {4, 1, -1};
    CHECK_THROWS_AS(run_simulation(bad, streams), ConfigError);

    bad = cfg;
    bad.streams = 3; // only two stream datasets supplied
    CHECK_THROWS_AS(run_simulation(bad, streams), ConfigError);

    std::vector<StreamData> lopsided = streams;
    lopsided[1].node_shards.pop_back();
    CHECK_THROWS_AS(run_simulation(cfg, lopsided), ConfigError);
}

TEST_CASE("simulation reruns are bit-identical") {
    SimulationConfig cfg = toy_sim_config();
    std::vector<StreamData> streams = toy_streams(2, 2, 8, 11);
    SimulationResult a = run_simulation(cfg, streams);
    SimulationResult b = run_simulation(cfg, streams);

    CHECK(a.final_params.max_abs_difference(b.final_params) == 0.0);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t r = 0; r < a.history.size(); ++r)
        for (std::size_t s = 0; s < a.history[r].per_stream.size(); ++s) {
            const Metrics& ma = a.history[r].per_stream[s];
            const Metrics& mb = b.history[r].per_stream[s];
            CHECK(ma.tp == mb.tp);
            CHECK(ma.fp == mb.fp);
            CHECK(ma.tn == mb.tn);
            CHECK(ma.fn == mb.fn);
        }

    SimulationConfig other = cfg;
    other.seed = 43;
    SimulationResult c = run_simulation(other, streams);
    CHECK(c.final_params.max_abs_difference(a.final_params) > 0.0);
}

TEST_CASE("per-round aggregation diverges from the running mean") {
    SimulationConfig cfg = toy_sim_config();
    std::vector<StreamData> streams = toy_streams(2, 2, 8, 13);

    cfg.window = AggregationWindow::Lifetime;
    SimulationResult lifetime = run_simulation(cfg, streams);
    cfg.window = AggregationWindow::PerRound;
    SimulationResult per_round = run_simulation(cfg, streams);

    // identical first round (the running mean has no history yet)
    CHECK(lifetime.history[0].per_stream[0].tp == per_round.history[0].per_stream[0].tp);
    // later rounds weight history differently
    CHECK(lifetime.final_params.max_abs_difference(per_round.final_params) > 0.0);
}
