#ifndef FEDPHISH_CONTINUAL_HPP
#define FEDPHISH_CONTINUAL_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fedphish/dataset.hpp"
#include "fedphish/model.hpp"
#include "fedphish/optim.hpp"
#include "fedphish/rng.hpp"

namespace fedphish {

enum class StrategyKind { Naive, Cumulative, Replay, LwF, MIR };

StrategyKind parse_strategy_kind(const std::string& name); // throws ConfigError
std::string strategy_kind_name(StrategyKind kind);
std::string strategy_display_label(StrategyKind kind);

struct StrategyConfig {
    StrategyKind kind = StrategyKind::Naive;
    // Replay and MIR
    int buffer_capacity = 500;
    // Replay
    double replay_ratio = 1.0; // replayed rows per batch = replay_ratio * batch_size
    // LwF
    double lambda = 1.0;
    double temperature = 2.0;
    // MIR; retrieve_count 0 means "use the batch size"
    int candidate_count = 50;
    int retrieve_count = 0;
};

/// Throws ConfigError on out-of-range hyperparameters for the chosen kind.
void validate_strategy_config(const StrategyConfig& cfg);

/// Reservoir sample of the record stream offered via buffer_insert: after n
/// offers each one resides in the buffer with probability capacity/n.
struct ReplayBuffer {
    int capacity = 0;
    std::vector<DatasetRecord> items;
    std::int64_t seen_count = 0;
    RngStream rng;

    ReplayBuffer() : rng(0) {}
    ReplayBuffer(int cap, std::uint64_t seed) : capacity(cap), rng(derive_seed(seed, "buffer")) {}
};

void buffer_insert(ReplayBuffer& buffer, const DatasetRecord& record);

/// Per-node strategy memory, owned by one node for its whole lifetime.
struct StrategyState {
    StrategyConfig config;
    ReplayBuffer buffer;     // Replay / MIR
    ParamSet lwf_old;        // LwF snapshot, frozen between experience boundaries
    bool lwf_has_old = false;
    Dataset accumulated;     // Cumulative union of experiences seen so far
    int experience_index = -1; // last experience id processed; -1 before the first
};

StrategyState make_strategy_state(const StrategyConfig& cfg, std::uint64_t seed);

/// Indices of the k candidates whose per-example cross-entropy climbs most
/// from `current` to `virtual_model` (score descending, ties by candidate
/// index ascending). k larger than the candidate list is clamped with a
/// stderr note.
std::vector<int> mir_select(const ModelInstance& current, const ModelInstance& virtual_model,
                            const std::vector<DatasetRecord>& candidates, int k);

struct TrainStats {
    double initial_loss = 0.0; // training-view cross-entropy before the first step
    double final_loss = 0.0;   // and after the last one
    std::int64_t steps = 0;
    std::int64_t examples_trained = 0; // rows fed to the optimizer, replays included
    int mir_clamp_events = 0;
};

/// Observes every optimizer-step batch (rows exactly as trained, labels
/// alongside); used to assert that strategies never fabricate data.
using BatchObserver = std::function<void(const Tensor& batch, const std::vector<int>& labels)>;

/// One experience of continual training under state.config.kind, mutating
/// the model in place. `experience_id` marks boundaries: the first call with
/// a new id snapshots the LwF teacher and extends the Cumulative store; the
/// replay buffer is offered each incoming example once per call (first epoch,
/// after that example's step; with epochs == 0 the offers happen without
/// training, so state updates survive no-op calls). Each call runs its own
/// fresh optimizer. Deterministic per (inputs, seed).
TrainStats train_experience(ModelInstance& model, StrategyState& state, const Dataset& experience,
                            int experience_id, int epochs, int batch_size, double lr,
                            std::uint64_t seed, OptimizerKind optimizer = OptimizerKind::Adam,
                            const BatchObserver* observer = nullptr);

} // namespace fedphish

#endif
