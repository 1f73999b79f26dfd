#include "fedphish/continual.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <optional>

#include "fedphish/errors.hpp"
#include "fedphish/ops.hpp"

namespace fedphish {

StrategyKind parse_strategy_kind(const std::string& name) {
    if (name == "naive" || name == "Naive") return StrategyKind::Naive;
    if (name == "cumulative" || name == "Cumulative") return StrategyKind::Cumulative;
    if (name == "replay" || name == "Replay") return StrategyKind::Replay;
    if (name == "lwf" || name == "LwF") return StrategyKind::LwF;
    if (name == "mir" || name == "MIR") return StrategyKind::MIR;
    throw ConfigError("unknown strategy '" + name +
                      "' (expected naive, cumulative, replay, lwf, or mir)");
}

std::string strategy_kind_name(StrategyKind kind) {
    switch (kind) {
    case StrategyKind::Naive: return "naive";
    case StrategyKind::Cumulative: return "cumulative";
    case StrategyKind::Replay: return "replay";
    case StrategyKind::LwF: return "lwf";
    case StrategyKind::MIR: return "mir";
    }
    throw ConfigError("unhandled strategy kind");
}

std::string strategy_display_label(StrategyKind kind) {
    switch (kind) {
    case StrategyKind::Naive: return "Naive";
    case StrategyKind::Cumulative: return "Cumulative";
    case StrategyKind::Replay: return "Replay";
    case StrategyKind::LwF: return "LwF";
    case StrategyKind::MIR: return "MIR";
    }
    throw ConfigError("unhandled strategy kind");
}

void validate_strategy_config(const StrategyConfig& cfg) {
    switch (cfg.kind) {
    case StrategyKind::Naive:
    case StrategyKind::Cumulative: break;
    case StrategyKind::Replay:
        if (cfg.buffer_capacity < 1) throw ConfigError("replay: buffer capacity must be >= 1");
        if (cfg.replay_ratio < 0.0) throw ConfigError("replay: replay ratio must be >= 0");
        break;
    case StrategyKind::LwF:
        if (cfg.lambda < 0.0) throw ConfigError("lwf: lambda must be >= 0");
        if (cfg.temperature <= 0.0) throw ConfigError("lwf: temperature must be > 0");
        break;
    case StrategyKind::MIR:
        if (cfg.buffer_capacity < 1) throw ConfigError("mir: buffer capacity must be >= 1");
        if (cfg.candidate_count < 1) throw ConfigError("mir: candidate count must be >= 1");
        if (cfg.retrieve_count < 0) throw ConfigError("mir: retrieve count must be >= 0");
        if (cfg.retrieve_count > cfg.candidate_count)
            throw ConfigError("mir: retrieve count " + std::to_string(cfg.retrieve_count) +
                              " exceeds candidate count " + std::to_string(cfg.candidate_count));
        break;
    }
}

void buffer_insert(ReplayBuffer& buffer, const DatasetRecord& record) {
    if (buffer.capacity < 1) throw UsageError("buffer_insert: capacity must be >= 1");
    buffer.seen_count += 1;
    if (static_cast<int>(buffer.items.size()) < buffer.capacity) {
        buffer.items.push_back(record);
        return;
    }
    // Keep the n-th offer with probability capacity/n, evicting a uniformly
    // random resident.
    const std::uint64_t slot = buffer.rng.uniform_int(static_cast<std::uint64_t>(buffer.seen_count));
    if (slot < static_cast<std::uint64_t>(buffer.capacity))
        buffer.items[static_cast<std::size_t>(slot)] = record;
}

StrategyState make_strategy_state(const StrategyConfig& cfg, std::uint64_t seed) {
    validate_strategy_config(cfg);
    StrategyState state;
    state.config = cfg;
    if (cfg.kind == StrategyKind::Replay || cfg.kind == StrategyKind::MIR)
        state.buffer = ReplayBuffer(cfg.buffer_capacity, seed);
    return state;
}

namespace {

std::pair<Tensor, std::vector<int>> build_batch(const std::vector<const DatasetRecord*>& rows) {
    const std::int64_t b = static_cast<std::int64_t>(rows.size());
    const std::int64_t w = static_cast<std::int64_t>(rows[0]->features.size());
    Tensor batch = Tensor::zeros({b, w});
    std::vector<int> labels(rows.size());
    for (std::int64_t r = 0; r < b; ++r) {
        const DatasetRecord& rec = *rows[static_cast<std::size_t>(r)];
        for (std::int64_t c = 0; c < w; ++c) batch.at(r, c) = rec.features[static_cast<std::size_t>(c)];
        labels[static_cast<std::size_t>(r)] = rec.label;
    }
    return {std::move(batch), std::move(labels)};
}

// Mean cross-entropy of the model over a record list, eval mode, batched.
double dataset_cross_entropy(const ModelInstance& model, const std::vector<DatasetRecord>& records) {
    constexpr std::size_t kEvalBatch = 256;
    double total = 0.0;
    for (std::size_t at = 0; at < records.size(); at += kEvalBatch) {
        const std::size_t end = std::min(at + kEvalBatch, records.size());
        std::vector<const DatasetRecord*> rows;
        rows.reserve(end - at);
        for (std::size_t i = at; i < end; ++i) rows.push_back(&records[i]);
        auto [batch, labels] = build_batch(rows);
        const std::vector<double> losses =
            nn::cross_entropy_per_example(model_logits(model, batch), labels);
        for (double l : losses) total += l;
    }
    return total / static_cast<double>(records.size());
}

struct StepContext {
    ModelInstance& model;
    OptimizerState& opt;
    double lr;
    RngStream& dropout_rng;
    const BatchObserver* observer;
    TrainStats& stats;
};

// One optimizer step on the given rows: CE plus an optional distillation
// term toward a frozen teacher.
void gradient_step(StepContext& ctx, const std::vector<const DatasetRecord*>& rows,
                   const ModelInstance* teacher, double lambda, double temperature) {
    auto [batch, labels] = build_batch(rows);
    Tape tape;
    ParamVars pv = register_params(tape, ctx.model.params);
    Var logits = model_forward(tape, ctx.model, pv, batch, true, &ctx.dropout_rng);
    Var loss = tape.cross_entropy(logits, labels);
    if (teacher) {
        const Tensor old_logits = model_logits(*teacher, batch);
        loss = tape.add(loss, tape.scale(tape.distillation(old_logits, logits, temperature), lambda));
    }
    tape.backward(loss);
    const Gradients grads = collect_gradients(tape, pv, ctx.model.params);
    optimizer_step(ctx.model.params, grads, ctx.opt, ctx.lr);
    ctx.stats.steps += 1;
    ctx.stats.examples_trained += static_cast<std::int64_t>(rows.size());
    if (ctx.observer && *ctx.observer) (*ctx.observer)(batch, labels);
}

} // namespace

std::vector<int> mir_select(const ModelInstance& current, const ModelInstance& virtual_model,
                            const std::vector<DatasetRecord>& candidates, int k) {
    if (candidates.empty()) return {};
    if (k < 0) throw UsageError("mir_select: negative k");
    if (k > static_cast<int>(candidates.size())) {
        std::cerr << "mir_select: clamping retrieve count " << k << " to "
                  << candidates.size() << " candidates\n";
        k = static_cast<int>(candidates.size());
    }
    std::vector<const DatasetRecord*> rows;
    rows.reserve(candidates.size());
    for (const auto& r : candidates) rows.push_back(&r);
    auto [batch, labels] = build_batch(rows);
    const std::vector<double> loss_now =
        nn::cross_entropy_per_example(model_logits(current, batch), labels);
    const std::vector<double> loss_virtual =
        nn::cross_entropy_per_example(model_logits(virtual_model, batch), labels);

    std::vector<int> idx(candidates.size());
    std::iota(idx.begin(), idx.end(), 0);
    // Stable sort on descending score keeps equal scores index-ascending.
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return loss_virtual[static_cast<std::size_t>(a)] - loss_now[static_cast<std::size_t>(a)] >
               loss_virtual[static_cast<std::size_t>(b)] - loss_now[static_cast<std::size_t>(b)];
    });
    idx.resize(static_cast<std::size_t>(k));
    return idx;
}

TrainStats train_experience(ModelInstance& model, StrategyState& state, const Dataset& experience,
                            int experience_id, int epochs, int batch_size, double lr,
                            std::uint64_t seed, OptimizerKind optimizer,
                            const BatchObserver* observer) {
    if (experience.records.empty()) throw DataError("train_experience: empty experience");
    if (epochs < 0) throw UsageError("train_experience: negative epoch count");
    if (batch_size < 1) throw UsageError("train_experience: batch size must be >= 1");
    validate_strategy_config(state.config);
    const StrategyKind kind = state.config.kind;

    // Boundary bookkeeping happens exactly once per experience id, before
    // any training, and regardless of epoch count.
    if (experience_id != state.experience_index) {
        state.experience_index = experience_id;
        if (kind == StrategyKind::LwF) {
            state.lwf_old = model.params;
            state.lwf_has_old = true;
        }
        if (kind == StrategyKind::Cumulative) {
            if (state.accumulated.feature_names.empty()) {
                state.accumulated.feature_names = experience.feature_names;
                state.accumulated.source = "accumulated";
            }
            state.accumulated.records.insert(state.accumulated.records.end(),
                                             experience.records.begin(),
                                             experience.records.end());
        }
    }

    const std::vector<DatasetRecord>& view =
        kind == StrategyKind::Cumulative ? state.accumulated.records : experience.records;

    RngStream root(derive_seed(seed, "train-experience"));
    RngStream order_rng = root.fork("order");
    RngStream dropout_rng = root.fork("dropout");
    RngStream retrieval_rng = root.fork("retrieval");

    OptimizerState opt = OptimizerState::for_params(model.params, optimizer);
    TrainStats stats;
    stats.initial_loss = dataset_cross_entropy(model, view);

    std::optional<ModelInstance> teacher;
    if (kind == StrategyKind::LwF && state.config.lambda > 0.0)
        teacher.emplace(ModelInstance{model.kind, model.config, state.lwf_old, model.rng_seed});

    const bool uses_buffer = kind == StrategyKind::Replay || kind == StrategyKind::MIR;
    const int retrieve_count =
        state.config.retrieve_count > 0 ? state.config.retrieve_count : batch_size;

    StepContext ctx{model, opt, lr, dropout_rng, observer, stats};

    std::vector<std::size_t> order(view.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < epochs; ++epoch) {
        order_rng.shuffle(order);
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(batch_size)) {
            const std::size_t end = std::min(at + static_cast<std::size_t>(batch_size), order.size());
            std::vector<const DatasetRecord*> rows;
            rows.reserve(end - at);
            for (std::size_t i = at; i < end; ++i) rows.push_back(&view[order[i]]);

            switch (kind) {
            case StrategyKind::Naive:
            case StrategyKind::Cumulative: gradient_step(ctx, rows, nullptr, 0.0, 0.0); break;
            case StrategyKind::LwF:
                gradient_step(ctx, rows, teacher ? &*teacher : nullptr, state.config.lambda,
                              state.config.temperature);
                break;
            case StrategyKind::Replay: {
                if (!state.buffer.items.empty()) {
                    const std::size_t want = static_cast<std::size_t>(
                        std::llround(state.config.replay_ratio * batch_size));
                    if (want > 0) {
                        if (state.buffer.items.size() <= want) {
                            for (const auto& r : state.buffer.items) rows.push_back(&r);
                        } else {
                            for (std::size_t j : retrieval_rng.sample_without_replacement(
                                     state.buffer.items.size(), want))
                                rows.push_back(&state.buffer.items[j]);
                        }
                    }
                }
                gradient_step(ctx, rows, nullptr, 0.0, 0.0);
                break;
            }
            case StrategyKind::MIR: {
                if (state.buffer.items.empty()) {
                    gradient_step(ctx, rows, nullptr, 0.0, 0.0); // no memory to interfere with
                    break;
                }
                // Virtual step on scratch copies; the real model and
                // optimizer stay at the pre-virtual state.
                ModelInstance scratch = model;
                OptimizerState scratch_opt = opt;
                {
                    auto [vbatch, vlabels] = build_batch(rows);
                    Tape tape;
                    ParamVars pv = register_params(tape, scratch.params);
                    Var logits = model_forward(tape, scratch, pv, vbatch, true, &dropout_rng);
                    Var loss = tape.cross_entropy(logits, vlabels);
                    tape.backward(loss);
                    const Gradients grads = collect_gradients(tape, pv, scratch.params);
                    optimizer_step(scratch.params, grads, scratch_opt, lr);
                }

                const std::size_t n_buf = state.buffer.items.size();
                const std::size_t c =
                    std::min<std::size_t>(static_cast<std::size_t>(state.config.candidate_count), n_buf);
                std::vector<DatasetRecord> candidates;
                candidates.reserve(c);
                if (c == n_buf) {
                    candidates = state.buffer.items;
                } else {
                    for (std::size_t j : retrieval_rng.sample_without_replacement(n_buf, c))
                        candidates.push_back(state.buffer.items[j]);
                }
                if (retrieve_count > static_cast<int>(candidates.size()))
                    stats.mir_clamp_events += 1;
                const std::vector<int> picked =
                    mir_select(model, scratch, candidates, retrieve_count);
                for (int j : picked) rows.push_back(&candidates[static_cast<std::size_t>(j)]);
                gradient_step(ctx, rows, nullptr, 0.0, 0.0);
                break;
            }
            }

            if (uses_buffer && epoch == 0)
                for (std::size_t i = at; i < end; ++i)
                    buffer_insert(state.buffer, view[order[i]]);
        }
    }

    if (epochs == 0 && uses_buffer) {
        order_rng.shuffle(order);
        for (std::size_t i : order) buffer_insert(state.buffer, view[i]);
    }

    stats.final_loss = stats.steps == 0 ? stats.initial_loss : dataset_cross_entropy(model, view);
    return stats;
}

} // namespace fedphish
