#include "fedphish/federated.hpp"

#include <algorithm>
#include <numeric>

#include "fedphish/errors.hpp"

namespace fedphish {

GlobalState server_init(const ParamSet& w0) {
    GlobalState state;
    state.w_cum = ParamSet::zeros_like(w0);
    state.n_total = 0;
    state.w0 = w0;
    state.updates_processed = 0;
    return state;
}

void server_ingest(GlobalState& state, const NodeUpdate& update) {
    if (!state.w_cum.shape_compatible(update.params))
        throw ProtocolError("server ingest: update from node " + std::to_string(update.node_id) +
                            " is shape-incompatible with the global model");
    if (update.sample_count <= 0)
        throw ProtocolError("server ingest: node " + std::to_string(update.node_id) +
                            " reported sample count " + std::to_string(update.sample_count));
    state.w_cum.add_scaled(update.params, static_cast<double>(update.sample_count));
    state.n_total += update.sample_count;
    state.w0.assign(state.w_cum);
    state.w0.scale(1.0 / static_cast<double>(state.n_total));
    state.updates_processed += 1;
}

ParamSet broadcast_get(const GlobalState& state) { return state.w0; }

AggregationWindow parse_window(const std::string& name) {
    if (name == "cumulative") return AggregationWindow::Lifetime;
    if (name == "per-round") return AggregationWindow::PerRound;
    throw ConfigError("unknown aggregation window '" + name +
                      "' (expected cumulative or per-round)");
}

std::string window_name(AggregationWindow window) {
    return window == AggregationWindow::Lifetime ? "cumulative" : "per-round";
}

NodeUpdate node_round(const NodeConfig& node, const ModelInstance& prototype, const ParamSet& w0,
                      const Dataset& shard, int experience_id, int round, StrategyState& state,
                      std::uint64_t seed) {
    if (shard.records.empty())
        throw ConfigError("node " + std::to_string(node.node_id) + " round " +
                          std::to_string(round) + ": empty shard");
    ModelInstance model = prototype;
    model.params.assign(w0);
    train_experience(model, state, shard, experience_id, node.local_epochs, node.batch_size,
                     node.learning_rate, seed, node.optimizer);
    NodeUpdate update;
    update.node_id = node.node_id;
    update.params = std::move(model.params);
    update.sample_count = static_cast<std::int64_t>(shard.records.size());
    update.round = round;
    return update;
}

std::vector<int> default_schedule(int rounds, int streams) {
    if (streams < 1) throw ConfigError("schedule: stream count must be >= 1");
    if (rounds < streams)
        throw ConfigError("schedule: " + std::to_string(rounds) + " rounds cannot cover " +
                          std::to_string(streams) + " streams");
    std::vector<int> schedule(static_cast<std::size_t>(streams), rounds / streams);
    for (int i = 0; i < rounds % streams; ++i) schedule[static_cast<std::size_t>(i)] += 1;
    return schedule;
}

Metrics evaluate_model(const ModelInstance& model, const Dataset& test) {
    if (test.records.empty()) return Metrics{};
    constexpr std::size_t kEvalBatch = 256;
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t at = 0; at < test.records.size(); at += kEvalBatch) {
        const std::size_t end = std::min(at + kEvalBatch, test.records.size());
        const std::int64_t b = static_cast<std::int64_t>(end - at);
        Tensor batch = Tensor::zeros({b, test.width()});
        for (std::int64_t r = 0; r < b; ++r) {
            const auto& f = test.records[at + static_cast<std::size_t>(r)].features;
            for (std::int64_t c = 0; c < test.width(); ++c)
                batch.at(r, c) = f[static_cast<std::size_t>(c)];
        }
        const std::vector<int> preds = predict_labels(model, batch);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const int y = test.records[at + i].label;
            if (preds[i] == 1 && y == 1)
                ++tp;
            else if (preds[i] == 1 && y == 0)
                ++fp;
            else if (preds[i] == 0 && y == 0)
                ++tn;
            else
                ++fn;
        }
    }
    return metrics_from_counts(tp, fp, tn, fn);
}

SimulationResult run_simulation(const SimulationConfig& cfg,
                                const std::vector<StreamData>& streams) {
    if (cfg.nodes < 1) throw ConfigError("simulation: node count must be >= 1");
    if (cfg.streams < 1) throw ConfigError("simulation: stream count must be >= 1");
    if (static_cast<int>(streams.size()) != cfg.streams)
        throw ConfigError("simulation: " + std::to_string(streams.size()) +
                          " stream datasets for " + std::to_string(cfg.streams) +
                          " configured streams");
    std::vector<int> schedule =
        cfg.schedule.empty() ? default_schedule(cfg.rounds, cfg.streams) : cfg.schedule;
    if (static_cast<int>(schedule.size()) != cfg.streams)
        throw ConfigError("simulation: schedule length " + std::to_string(schedule.size()) +
                          " != stream count " + std::to_string(cfg.streams));
    if (std::accumulate(schedule.begin(), schedule.end(), 0) != cfg.rounds)
        throw ConfigError("simulation: schedule does not sum to " + std::to_string(cfg.rounds) +
                          " rounds");
    for (int block : schedule)
        if (block < 0) throw ConfigError("simulation: negative schedule entry");
    for (const StreamData& sd : streams)
        if (static_cast<int>(sd.node_shards.size()) != cfg.nodes)
            throw ConfigError("simulation: a stream carries " +
                              std::to_string(sd.node_shards.size()) + " shards for " +
                              std::to_string(cfg.nodes) + " nodes");

    // Active stream per round, 1-based.
    std::vector<int> active;
    active.reserve(static_cast<std::size_t>(cfg.rounds));
    for (int s = 0; s < cfg.streams; ++s)
        for (int i = 0; i < schedule[static_cast<std::size_t>(s)]; ++i) active.push_back(s + 1);

    ModelInstance prototype =
        build_model(cfg.model_kind, cfg.model_config, derive_seed(cfg.seed, "init"));
    GlobalState server = server_init(prototype.params);

    std::vector<NodeConfig> nodes;
    std::vector<StrategyState> states;
    for (int k = 1; k <= cfg.nodes; ++k) {
        NodeConfig nc;
        nc.node_id = k;
        nc.learning_rate = cfg.lr;
        nc.local_epochs = cfg.local_epochs;
        nc.batch_size = cfg.batch_size;
        nc.strategy = cfg.strategy;
        nc.optimizer = cfg.optimizer;
        nodes.push_back(nc);
        states.push_back(make_strategy_state(
            cfg.strategy, derive_seed(cfg.seed, "node-state", static_cast<std::uint64_t>(k))));
    }

    SimulationResult result;
    result.history.reserve(active.size());
    ModelInstance evaluator = prototype;

    for (int r = 1; r <= static_cast<int>(active.size()); ++r) {
        const int stream_no = active[static_cast<std::size_t>(r - 1)];
        const StreamData& sd = streams[static_cast<std::size_t>(stream_no - 1)];
        const ParamSet w0 = broadcast_get(server);
        if (cfg.window == AggregationWindow::PerRound) server = server_init(w0);

        const std::uint64_t round_seed =
            derive_seed(cfg.seed, "round", static_cast<std::uint64_t>(r));
        for (int k = 1; k <= cfg.nodes; ++k) {
            NodeUpdate update = node_round(
                nodes[static_cast<std::size_t>(k - 1)], prototype, w0,
                sd.node_shards[static_cast<std::size_t>(k - 1)], stream_no - 1, r,
                states[static_cast<std::size_t>(k - 1)],
                derive_seed(round_seed, "node", static_cast<std::uint64_t>(k)));
            server_ingest(server, update);
        }

        RoundRecord record;
        record.round = r;
        record.active_stream = stream_no;
        evaluator.params.assign(server.w0);
        record.per_stream.reserve(streams.size());
        for (const StreamData& eval_sd : streams)
            record.per_stream.push_back(evaluate_model(evaluator, eval_sd.test_fold));
        result.history.push_back(std::move(record));
    }

    result.final_params = broadcast_get(server);
    evaluator.params.assign(result.final_params);
    Dataset union_fold;
    if (!streams.empty()) {
        union_fold.feature_names = streams.front().test_fold.feature_names;
        union_fold.source = "test-union";
        for (const StreamData& sd : streams)
            union_fold.records.insert(union_fold.records.end(), sd.test_fold.records.begin(),
                                      sd.test_fold.records.end());
    }
    result.final_union = evaluate_model(evaluator, union_fold);
    return result;
}

} // namespace fedphish
