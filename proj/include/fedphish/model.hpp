#ifndef FEDPHISH_MODEL_HPP
#define FEDPHISH_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fedphish/params.hpp"
#include "fedphish/rng.hpp"
#include "fedphish/tape.hpp"
#include "fedphish/tensor.hpp"

namespace fedphish {

enum class ModelKind { AttentionClassifier, SimpleMLP, DeepMLP, SimpleRNN };

ModelKind parse_model_kind(const std::string& name); // throws ConfigError on unknown name
std::string model_kind_name(ModelKind kind);         // CLI / file identifier
std::string model_display_label(ModelKind kind);     // report table label

/// How the attention blocks see a feature vector: as one projected token
/// (default), or as input_dim feature tokens, each the feature value scaling
/// a learned per-feature embedding row plus a per-feature bias row, mean
/// pooled after the encoder stack (ablation mode). The bias row is what lets
/// attention tell two features with equal values apart.
enum class AttnTokens { Single, Features };

AttnTokens parse_attn_tokens(const std::string& name); // "single" | "features"
std::string attn_tokens_name(AttnTokens tokens);

/// One config type covers all four architectures; each kind reads only the
/// fields it needs.
struct ModelConfig {
    int input_dim = 19;
    int num_classes = 2;

    // AttentionClassifier
    int hidden_dim = 64;
    int num_layers = 2;
    int num_heads = 4;
    double dropout_rate = 0.2;
    AttnTokens attn_tokens = AttnTokens::Single;

    // baselines
    int mlp_hidden = 32;
    std::vector<int> deep_hidden = {64, 32, 16};
    int rnn_hidden = 32;
};

struct ModelInstance {
    ModelKind kind = ModelKind::SimpleMLP;
    ModelConfig config;
    ParamSet params;
    std::uint64_t rng_seed = 0;
};

/// Closed-form number of trainable values for (kind, config); build_model's
/// output always satisfies params.total_values() == expected_param_count().
std::int64_t expected_param_count(ModelKind kind, const ModelConfig& config);

/// Parameters drawn uniform in +-sqrt(1/fan_in), sequentially from one
/// stream seeded with `seed`; identical (kind, config, seed) gives
/// bit-identical parameters. Throws ConfigError on inconsistent config.
ModelInstance build_model(ModelKind kind, const ModelConfig& config, std::uint64_t seed);

/// Forward pass recorded on a tape, for training. `pv` must come from
/// register_params(tape, model.params). In train mode with dropout_rate > 0
/// a dropout rng is required (UsageError otherwise); masks are inverted
/// (kept activations scaled by 1/(1-p)) so eval needs no rescaling.
Var model_forward(Tape& tape, const ModelInstance& model, const ParamVars& pv,
                  const Tensor& batch, bool train_mode, RngStream* dropout_rng = nullptr);

/// Gradient-free eval forward; identical values to the tape path with
/// train_mode=false.
Tensor model_logits(const ModelInstance& model, const Tensor& batch);

struct Prediction {
    int label = 0;   // argmax, ties toward 0
    double prob = 0; // softmax probability of the chosen class
};

Prediction predict(const ModelInstance& model, const std::vector<double>& features);

/// Batched argmax labels (ties toward class 0), for metric computation.
std::vector<int> predict_labels(const ModelInstance& model, const Tensor& batch);

// Checkpoints: a small header (kind + config) followed by the ParamSet text
// format. Round-trips bit-exactly.
void save_model(const std::string& path, const ModelInstance& model);
ModelInstance load_model(const std::string& path);

} // namespace fedphish

#endif
