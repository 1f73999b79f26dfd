#ifndef FEDPHISH_FEDERATED_HPP
#define FEDPHISH_FEDERATED_HPP

#include <cstdint>
#include <vector>

#include "fedphish/continual.hpp"
#include "fedphish/dataset.hpp"
#include "fedphish/metrics.hpp"
#include "fedphish/model.hpp"

namespace fedphish {

struct NodeUpdate {
    int node_id = 0; // 1-based
    ParamSet params;
    std::int64_t sample_count = 0; // training examples this round; must be > 0
    int round = 0;
};

/// Aggregator state: a lifetime-cumulative sample-weighted mean. The global
/// model is w_cum / n_total at all times (vacuous before the first ingest).
struct GlobalState {
    ParamSet w_cum; // running sum of sample_count * params over all ingests
    std::int64_t n_total = 0;
    ParamSet w0;
    std::int64_t updates_processed = 0;
};

GlobalState server_init(const ParamSet& w0);

/// Folds one update into the cumulative mean. Updates are processed one at a
/// time in arrival order; the result is invariant under reordering of any
/// fixed update multiset. Throws ProtocolError on shape mismatch or
/// non-positive sample count.
void server_ingest(GlobalState& state, const NodeUpdate& update);

/// Copy of the current global model; mutating it cannot touch server state.
ParamSet broadcast_get(const GlobalState& state);

/// Lifetime reproduces the aggregator exactly as specified (every update
/// ever received keeps its weight); PerRound averages each round's updates
/// alone, the conventional federated baseline.
enum class AggregationWindow { Lifetime, PerRound };

AggregationWindow parse_window(const std::string& name);
std::string window_name(AggregationWindow window);

struct NodeConfig {
    int node_id = 1;
    double learning_rate = 0.001;
    int local_epochs = 10;
    int batch_size = 16;
    StrategyConfig strategy;
    OptimizerKind optimizer = OptimizerKind::Adam;
};

/// One node's contribution to one round: adopt w0, run train_experience on
/// the shard, return the trained parameters weighted by the shard size.
NodeUpdate node_round(const NodeConfig& node, const ModelInstance& prototype, const ParamSet& w0,
                      const Dataset& shard, int experience_id, int round, StrategyState& state,
                      std::uint64_t seed);

/// Per-stream data as the simulator consumes it: one training shard per node
/// plus the stream's held-out test fold.
struct StreamData {
    std::vector<Dataset> node_shards;
    Dataset test_fold;
};

struct SimulationConfig {
    int rounds = 20;
    int nodes = 3;
    int streams = 4;
    std::vector<int> schedule; // rounds per stream; empty = near-equal blocks
    int local_epochs = 10;
    int batch_size = 16;
    double lr = 0.001;
    ModelKind model_kind = ModelKind::AttentionClassifier;
    ModelConfig model_config;
    StrategyConfig strategy;
    OptimizerKind optimizer = OptimizerKind::Adam;
    AggregationWindow window = AggregationWindow::Lifetime;
    std::uint64_t seed = 42;
};

/// rounds split into `streams` consecutive blocks, sizes differing by <= 1,
/// remainder going to the earliest streams.
std::vector<int> default_schedule(int rounds, int streams);

struct RoundRecord {
    int round = 0;         // 1-based
    int active_stream = 0; // 1-based
    std::vector<Metrics> per_stream;
};

struct SimulationResult {
    std::vector<RoundRecord> history;
    ParamSet final_params;
    Metrics final_union; // final global model on the union of all test folds
};

/// Batched argmax evaluation; an empty test fold yields all-zero metrics
/// with every defined-flag cleared.
Metrics evaluate_model(const ModelInstance& model, const Dataset& test);

/// Drives rounds x nodes of continual local training against the
/// aggregator. Per round: nodes train on their shard of the schedule's
/// active stream, the server ingests updates in node-id order, and the
/// global model is scored on every stream's test fold. Bit-deterministic in
/// (config, data).
SimulationResult run_simulation(const SimulationConfig& cfg,
                                const std::vector<StreamData>& streams);

} // namespace fedphish

#endif
