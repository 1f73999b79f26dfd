#include "fedphish/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fedphish/encoder.hpp"
#include "fedphish/errors.hpp"
#include "fedphish/ops.hpp"

namespace fedphish {

ModelKind parse_model_kind(const std::string& name) {
    if (name == "attention" || name == "AttentionClassifier") return ModelKind::AttentionClassifier;
    if (name == "mlp" || name == "SimpleMLP") return ModelKind::SimpleMLP;
    if (name == "deep-mlp" || name == "DeepMLP") return ModelKind::DeepMLP;
    if (name == "rnn" || name == "SimpleRNN") return ModelKind::SimpleRNN;
    throw ConfigError("unknown model kind '" + name +
                      "' (expected attention, mlp, deep-mlp, or rnn)");
}

std::string model_kind_name(ModelKind kind) {
    switch (kind) {
    case ModelKind::AttentionClassifier: return "attention";
    case ModelKind::SimpleMLP: return "mlp";
    case ModelKind::DeepMLP: return "deep-mlp";
    case ModelKind::SimpleRNN: return "rnn";
    }
    throw ConfigError("unhandled model kind");
}

std::string model_display_label(ModelKind kind) {
    switch (kind) {
    case ModelKind::AttentionClassifier: return "Ours";
    case ModelKind::SimpleMLP: return "Simple MLP";
    case ModelKind::DeepMLP: return "Deep MLP";
    case ModelKind::SimpleRNN: return "Simple RNN";
    }
    throw ConfigError("unhandled model kind");
}

namespace {

void validate_config(ModelKind kind, const ModelConfig& c) {
    if (c.input_dim < 1) throw ConfigError("model: input_dim must be >= 1");
    if (c.num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
    switch (kind) {
    case ModelKind::AttentionClassifier:
        if (c.hidden_dim < 1 || c.num_layers < 1 || c.num_heads < 1)
            throw ConfigError("attention model: hidden_dim, num_layers, num_heads must be >= 1");
        if (c.hidden_dim % c.num_heads != 0)
            throw ConfigError("attention model: hidden_dim " + std::to_string(c.hidden_dim) +
                              " not divisible by num_heads " + std::to_string(c.num_heads));
        if (c.dropout_rate < 0.0 || c.dropout_rate >= 1.0)
            throw ConfigError("attention model: dropout_rate must lie in [0, 1)");
        break;
    case ModelKind::SimpleMLP:
        if (c.mlp_hidden < 1) throw ConfigError("mlp model: hidden width must be >= 1");
        break;
    case ModelKind::DeepMLP:
        if (c.deep_hidden.empty()) throw ConfigError("deep mlp: needs at least one hidden layer");
        for (int w : c.deep_hidden)
            if (w < 1) throw ConfigError("deep mlp: hidden widths must be >= 1");
        break;
    case ModelKind::SimpleRNN:
        if (c.rnn_hidden < 1) throw ConfigError("rnn model: hidden width must be >= 1");
        break;
    }
}

// Every tensor of a layer (weight and bias alike) is drawn uniform in
// +-sqrt(1/fan_in) of that layer, sequentially from one stream.
Tensor init_uniform(RngStream& rng, std::vector<std::int64_t> shape, std::int64_t fan_in) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    Tensor t = Tensor::zeros(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

} // namespace

std::int64_t expected_param_count(ModelKind kind, const ModelConfig& c) {
    const std::int64_t in = c.input_dim, cls = c.num_classes;
    switch (kind) {
    case ModelKind::AttentionClassifier: {
        const std::int64_t h = c.hidden_dim;
        const std::int64_t proj =
            c.attn_tokens == AttnTokens::Single ? in * h + h : 2 * in * h;
        const std::int64_t per_layer = (h * h + h) + 4 * h * h; // linear + q/k/v/o
        return proj + c.num_layers * per_layer + (h * cls + cls);
    }
    case ModelKind::SimpleMLP: {
        const std::int64_t m = c.mlp_hidden;
        return (in * m + m) + (m * cls + cls);
    }
    case ModelKind::DeepMLP: {
        std::int64_t total = 0, prev = in;
        for (int w : c.deep_hidden) {
            total += prev * w + w;
            prev = w;
        }
        return total + prev * cls + cls;
    }
    case ModelKind::SimpleRNN: {
        const std::int64_t r = c.rnn_hidden;
        return (1 * r) + (r * r) + r + (r * cls + cls);
    }
    }
    throw ConfigError("unhandled model kind");
}

ModelInstance build_model(ModelKind kind, const ModelConfig& config, std::uint64_t seed) {
    validate_config(kind, config);
    RngStream rng(derive_seed(seed, "model-init"));
    ModelInstance m{kind, config, ParamSet{}, seed};
    const std::int64_t in = config.input_dim, cls = config.num_classes;

    switch (kind) {
    case ModelKind::AttentionClassifier: {
        const std::int64_t h = config.hidden_dim;
        if (config.attn_tokens == AttnTokens::Single) {
            m.params.add("proj.w", init_uniform(rng, {in, h}, in));
            m.params.add("proj.b", init_uniform(rng, {h}, in));
        } else {
            // Feature-token mode embeds each feature separately: row f of
            // proj.w scales with the feature value, row f of proj.b marks
            // which feature the token came from. Each row sees one scalar,
            // so fan-in is 1.
            m.params.add("proj.w", init_uniform(rng, {in, h}, 1));
            m.params.add("proj.b", init_uniform(rng, {in, h}, 1));
        }
        for (int l = 0; l < config.num_layers; ++l) {
            const std::string p = "layer" + std::to_string(l) + ".";
            m.params.add(p + "linear.w", init_uniform(rng, {h, h}, h));
            m.params.add(p + "linear.b", init_uniform(rng, {h}, h));
            m.params.add(p + "attn.wq", init_uniform(rng, {h, h}, h));
            m.params.add(p + "attn.wk", init_uniform(rng, {h, h}, h));
            m.params.add(p + "attn.wv", init_uniform(rng, {h, h}, h));
            m.params.add(p + "attn.wo", init_uniform(rng, {h, h}, h));
        }
        m.params.add("head.w", init_uniform(rng, {h, cls}, h));
        m.params.add("head.b", init_uniform(rng, {cls}, h));
        break;
    }
    case ModelKind::SimpleMLP: {
        const std::int64_t mh = config.mlp_hidden;
        m.params.add("fc1.w", init_uniform(rng, {in, mh}, in));
        m.params.add("fc1.b", init_uniform(rng, {mh}, in));
        m.params.add("fc2.w", init_uniform(rng, {mh, cls}, mh));
        m.params.add("fc2.b", init_uniform(rng, {cls}, mh));
        break;
    }
    case ModelKind::DeepMLP: {
        std::int64_t prev = in;
        int idx = 1;
        for (int w : config.deep_hidden) {
            const std::string p = "fc" + std::to_string(idx++) + ".";
            m.params.add(p + "w", init_uniform(rng, {prev, w}, prev));
            m.params.add(p + "b", init_uniform(rng, {w}, prev));
            prev = w;
        }
        const std::string p = "fc" + std::to_string(idx) + ".";
        m.params.add(p + "w", init_uniform(rng, {prev, cls}, prev));
        m.params.add(p + "b", init_uniform(rng, {cls}, prev));
        break;
    }
    case ModelKind::SimpleRNN: {
        const std::int64_t r = config.rnn_hidden;
        m.params.add("rnn.wxh", init_uniform(rng, {1, r}, 1));
        m.params.add("rnn.whh", init_uniform(rng, {r, r}, r));
        m.params.add("rnn.bh", init_uniform(rng, {r}, r));
        m.params.add("head.w", init_uniform(rng, {r, cls}, r));
        m.params.add("head.b", init_uniform(rng, {cls}, r));
        break;
    }
    }
    if (m.params.total_values() != expected_param_count(kind, config))
        throw ConfigError("model build: parameter count mismatch against closed form");
    return m;
}

Var encoder_layer(Tape& tape, Var h, Var linear_w, Var linear_b, const nn::AttentionProj& proj,
                  int heads) {
    Var r = tape.add(h, nn::linear(tape, h, linear_w, linear_b));
    Var attn = nn::multi_head_attention(tape, r, r, r, heads, proj);
    return tape.add(r, attn);
}

namespace {

// Single-token sequences make every attention matrix the 1x1 identity, so
// the whole block collapses to (r Wv) Wo for the batch at once. Exact, and
// it leaves wq/wk out of the graph (their true gradient is zero).
Var encoder_layer_single_token(Tape& tape, Var h, Var lw, Var lb, Var wv, Var wo) {
    Var r = tape.add(h, nn::linear(tape, h, lw, lb));
    Var attn = tape.matmul(tape.matmul(r, wv), wo);
    return tape.add(r, attn);
}

Tensor dropout_mask(std::vector<std::int64_t> shape, double rate, RngStream& rng) {
    Tensor mask = Tensor::zeros(std::move(shape));
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::int64_t i = 0; i < mask.size(); ++i)
        mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    return mask;
}

Var forward_attention(Tape& tape, const ModelInstance& model, const ParamVars& pv,
                      const Tensor& batch, bool train_mode, RngStream* dropout_rng) {
    const ModelConfig& c = model.config;
    Var pooled; // [batch, hidden] representation fed to the head

    if (c.attn_tokens == AttnTokens::Single) {
        Var x = tape.constant(batch);
        Var h = nn::linear(tape, x, pv.at("proj.w"), pv.at("proj.b"));
        for (int l = 0; l < c.num_layers; ++l) {
            const std::string p = "layer" + std::to_string(l) + ".";
            h = encoder_layer_single_token(tape, h, pv.at(p + "linear.w"), pv.at(p + "linear.b"),
                                           pv.at(p + "attn.wv"), pv.at(p + "attn.wo"));
        }
        pooled = h;
    } else {
        // Each example becomes an input_dim-long sequence of feature tokens,
        // token f = x[f] * proj.w[f,:] + proj.b[f,:]. Without the bias row,
        // two features holding equal values would be indistinguishable and
        // attention would see a bag of anonymous scalars.
        const std::int64_t rows = batch.rows(), width = batch.cols();
        const std::int64_t hidden = c.hidden_dim;
        std::vector<Var> per_example;
        per_example.reserve(static_cast<std::size_t>(rows));
        for (std::int64_t e = 0; e < rows; ++e) {
            Tensor scale = Tensor::zeros({width, hidden});
            for (std::int64_t f = 0; f < width; ++f) {
                const double v = batch.at(e, f);
                for (std::int64_t j = 0; j < hidden; ++j) scale.at(f, j) = v;
            }
            Var h = tape.add(tape.mul_mask(pv.at("proj.w"), std::move(scale)), pv.at("proj.b"));
            for (int l = 0; l < c.num_layers; ++l) {
                const std::string p = "layer" + std::to_string(l) + ".";
                nn::AttentionProj proj{pv.at(p + "attn.wq"), pv.at(p + "attn.wk"),
                                       pv.at(p + "attn.wv"), pv.at(p + "attn.wo")};
                h = encoder_layer(tape, h, pv.at(p + "linear.w"), pv.at(p + "linear.b"), proj,
                                  c.num_heads);
            }
            per_example.push_back(tape.mean_rows(h));
        }
        pooled = tape.concat_rows(per_example);
    }

    if (train_mode && c.dropout_rate > 0.0) {
        if (!dropout_rng) throw UsageError("attention forward: train mode needs a dropout rng");
        pooled = tape.mul_mask(
            pooled, dropout_mask(tape.value(pooled).shape(), c.dropout_rate, *dropout_rng));
    }
    return nn::linear(tape, pooled, pv.at("head.w"), pv.at("head.b"));
}

Var forward_simple_mlp(Tape& tape, const ParamVars& pv, const Tensor& batch) {
    Var x = tape.constant(batch);
    Var h = tape.relu(nn::linear(tape, x, pv.at("fc1.w"), pv.at("fc1.b")));
    return nn::linear(tape, h, pv.at("fc2.w"), pv.at("fc2.b"));
}

Var forward_deep_mlp(Tape& tape, const ModelInstance& model, const ParamVars& pv,
                     const Tensor& batch) {
    Var h = tape.constant(batch);
    const int hidden_layers = static_cast<int>(model.config.deep_hidden.size());
    for (int i = 1; i <= hidden_layers; ++i) {
        const std::string p = "fc" + std::to_string(i) + ".";
        h = tape.relu(nn::linear(tape, h, pv.at(p + "w"), pv.at(p + "b")));
    }
    const std::string p = "fc" + std::to_string(hidden_layers + 1) + ".";
    return nn::linear(tape, h, pv.at(p + "w"), pv.at(p + "b"));
}

Var forward_rnn(Tape& tape, const ModelInstance& model, const ParamVars& pv, const Tensor& batch) {
    const std::int64_t rows = batch.rows(), width = batch.cols();
    Var x = tape.constant(batch);
    Var wxh = pv.at("rnn.wxh"), whh = pv.at("rnn.whh"), bh = pv.at("rnn.bh");
    Var h = tape.constant(Tensor::zeros({rows, model.config.rnn_hidden}));
    for (std::int64_t t = 0; t < width; ++t) {
        Var xt = tape.slice_cols(x, t, t + 1);
        Var pre = tape.add_bias(tape.add(tape.matmul(xt, wxh), tape.matmul(h, whh)), bh);
        h = tape.tanh(pre);
    }
    return nn::linear(tape, h, pv.at("head.w"), pv.at("head.b"));
}

} // namespace

Var model_forward(Tape& tape, const ModelInstance& model, const ParamVars& pv,
                  const Tensor& batch, bool train_mode, RngStream* dropout_rng) {
    require_rank2(batch, "model forward");
    if (batch.cols() != model.config.input_dim)
        throw DimensionError("model forward: batch width " + std::to_string(batch.cols()) +
                             " != input_dim " + std::to_string(model.config.input_dim));
    if (batch.rows() < 1) throw DimensionError("model forward: empty batch");

    switch (model.kind) {
    case ModelKind::AttentionClassifier:
        return forward_attention(tape, model, pv, batch, train_mode, dropout_rng);
    case ModelKind::SimpleMLP: return forward_simple_mlp(tape, pv, batch);
    case ModelKind::DeepMLP: return forward_deep_mlp(tape, model, pv, batch);
    case ModelKind::SimpleRNN: return forward_rnn(tape, model, pv, batch);
    }
    throw ConfigError("unhandled model kind");
}

Tensor model_logits(const ModelInstance& model, const Tensor& batch) {
    Tape tape;
    ParamVars pv;
    pv.vars.reserve(model.params.size());
    for (const auto& e : model.params.entries())
        pv.vars.emplace_back(e.name, tape.constant(e.tensor));
    Var out = model_forward(tape, model, pv, batch, false, nullptr);
    return tape.value(out);
}

Prediction predict(const ModelInstance& model, const std::vector<double>& features) {
    if (static_cast<int>(features.size()) != model.config.input_dim)
        throw DimensionError("predict: " + std::to_string(features.size()) +
                             " features for input_dim " +
                             std::to_string(model.config.input_dim));
    Tensor batch({1, static_cast<std::int64_t>(features.size())}, features);
    Tensor probs = nn::softmax(model_logits(model, batch));
    int label = 0;
    for (std::int64_t c = 1; c < probs.cols(); ++c)
        if (probs.at(0, c) > probs.at(0, label)) label = static_cast<int>(c);
    return Prediction{label, probs.at(0, label)};
}

std::vector<int> predict_labels(const ModelInstance& model, const Tensor& batch) {
    const Tensor logits = model_logits(model, batch);
    std::vector<int> labels(static_cast<std::size_t>(logits.rows()));
    for (std::int64_t r = 0; r < logits.rows(); ++r) {
        int best = 0;
        for (std::int64_t c = 1; c < logits.cols(); ++c)
            if (logits.at(r, c) > logits.at(r, best)) best = static_cast<int>(c);
        labels[static_cast<std::size_t>(r)] = best;
    }
    return labels;
}

std::string attn_tokens_name(AttnTokens t) {
    return t == AttnTokens::Single ? "single" : "features";
}

AttnTokens parse_attn_tokens(const std::string& s) {
    if (s == "single") return AttnTokens::Single;
    if (s == "features") return AttnTokens::Features;
    throw ConfigError("unknown attention token mode '" + s + "' (expected single or features)");
}

void save_model(const std::string& path, const ModelInstance& model) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    const ModelConfig& c = model.config;
    os << "fedphish-model 1\n";
    os << "kind " << model_kind_name(model.kind) << "\n";
    os << "seed " << model.rng_seed << "\n";
    os << "input_dim " << c.input_dim << "\n";
    os << "num_classes " << c.num_classes << "\n";
    os << "hidden_dim " << c.hidden_dim << "\n";
    os << "num_layers " << c.num_layers << "\n";
    os << "num_heads " << c.num_heads << "\n";
    os << "dropout_rate " << format_double(c.dropout_rate) << "\n";
    os << "attn_tokens " << attn_tokens_name(c.attn_tokens) << "\n";
    os << "mlp_hidden " << c.mlp_hidden << "\n";
    os << "deep_hidden";
    for (int w : c.deep_hidden) os << ' ' << w;
    os << "\n";
    os << "rnn_hidden " << c.rnn_hidden << "\n";
    write_params(os, model.params);
    if (!os) throw IoError("write to '" + path + "' failed");
}

ModelInstance load_model(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(is, line) || line != "fedphish-model 1")
        throw DataError("model file '" + path + "': bad or missing header");

    ModelInstance m;
    bool have_kind = false;
    while (is.peek() != EOF && std::getline(is, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "kind") {
            std::string v;
            ls >> v;
            m.kind = parse_model_kind(v);
            have_kind = true;
        } else if (key == "seed") {
            ls >> m.rng_seed;
        } else if (key == "input_dim") {
            ls >> m.config.input_dim;
        } else if (key == "num_classes") {
            ls >> m.config.num_classes;
        } else if (key == "hidden_dim") {
            ls >> m.config.hidden_dim;
        } else if (key == "num_layers") {
            ls >> m.config.num_layers;
        } else if (key == "num_heads") {
            ls >> m.config.num_heads;
        } else if (key == "dropout_rate") {
            std::string v;
            ls >> v;
            m.config.dropout_rate = parse_double(v, "model dropout_rate");
        } else if (key == "attn_tokens") {
            std::string v;
            ls >> v;
            m.config.attn_tokens = parse_attn_tokens(v);
        } else if (key == "mlp_hidden") {
            ls >> m.config.mlp_hidden;
        } else if (key == "deep_hidden") {
            m.config.deep_hidden.clear();
            int w;
            while (ls >> w) m.config.deep_hidden.push_back(w);
            // the terminating failed extraction is how the list ends
            if (m.config.deep_hidden.empty())
                throw DataError("model file '" + path + "': malformed line '" + line + "'");
            continue;
        } else if (key == "rnn_hidden") {
            ls >> m.config.rnn_hidden;
        } else if (key == "fedphish-params") {
            // Start of the parameter block: re-parse it from here.
            break;
        } else {
            throw DataError("model file '" + path + "': unknown header key '" + key + "'");
        }
        if (ls.fail()) throw DataError("model file '" + path + "': malformed line '" + line + "'");
    }
    if (!have_kind) throw DataError("model file '" + path + "': missing kind");

    // read_params expects its own magic line, which the loop above consumed.
    // Seek back to re-read the whole params block: simplest is to re-scan.
    is.clear();
    is.seekg(0);
    std::string all((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    const std::size_t pos = all.find("fedphish-params");
    if (pos == std::string::npos)
        throw DataError("model file '" + path + "': missing parameter block");
    std::istringstream ps(all.substr(pos));
    m.params = read_params(ps);

    validate_config(m.kind, m.config);
    if (m.params.total_values() != expected_param_count(m.kind, m.config))
        throw DataError("model file '" + path + "': parameter block does not match config");
    return m;
}

} // namespace fedphish
