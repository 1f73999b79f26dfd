#ifndef FEDPHISH_TAPE_HPP
#define FEDPHISH_TAPE_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fedphish/params.hpp"
#include "fedphish/tensor.hpp"

namespace fedphish {

/// Handle to a node on a Tape.
struct Var {
    std::int32_t idx = -1;
    bool valid() const { return idx >= 0; }
};

/// Eager reverse-mode autodiff tape. Each op computes its value immediately
/// and records a pullback; backward() replays the pullbacks in reverse
/// creation order, which is a topological order by construction.
///
/// A tape lives for one forward/backward pass. Not thread-safe; one tape per
/// training step per model instance.
class Tape {
public:
    Tape() { nodes_.reserve(256); }

    /// Input data, labels-as-tensors, masks: tracked for values only.
    Var constant(Tensor value);
    /// Trainable parameter: participates in backward().
    Var leaf(Tensor value);

    const Tensor& value(Var v) const { return node(v).value; }
    /// Gradient of the last backward() target w.r.t. v. Zero tensor if the
    /// graph never touched v.
    const Tensor& grad(Var v);

    // ----- primitive ops -----
    Var matmul(Var a, Var b);                       // [m,k]*[k,n]
    Var matmul_nt(Var a, Var b);                    // [m,k]*[n,k]^T -> [m,n]
    Var add(Var a, Var b);                          // same shape
    Var sub(Var a, Var b);
    Var add_bias(Var x, Var bias);                  // bias broadcast over rows
    Var scale(Var a, double alpha);
    Var relu(Var a);
    Var tanh(Var a);
    Var mul_mask(Var a, Tensor mask);               // elementwise by a constant
    Var softmax_rows(Var a);
    Var slice_cols(Var a, std::int64_t c0, std::int64_t c1);
    Var concat_cols(const std::vector<Var>& parts);
    Var concat_rows(const std::vector<Var>& parts);
    Var mean_rows(Var a);                           // [m,n] -> [1,n]

    /// Mean over the batch of -log softmax(logits)[label]. Labels must lie in
    /// [0, num_classes). Stable via logsumexp.
    Var cross_entropy(Var logits, const std::vector<int>& labels);

    /// mean KL(softmax(old/T) || softmax(new/T)) * T^2. `old_logits` is a
    /// plain tensor: gradients flow only through new_logits.
    Var distillation(const Tensor& old_logits, Var new_logits, double temperature);

    /// Reverse pass from a scalar node. Throws UsageError if `loss` is not a
    /// scalar or the tape is empty.
    void backward(Var loss);
    bool backward_done() const { return backward_done_; }

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::function<void(Tape&)> pullback;
    };

    std::vector<Node> nodes_;
    bool backward_done_ = false;

    Node& node(Var v);
    const Node& node(Var v) const;
    Var push(Tensor value, bool requires_grad, std::function<void(Tape&)> pullback);
    Tensor& grad_buffer(Var v);

    friend struct TapeOps;
};

/// Parameter entries registered as tape leaves, in ParamSet order.
struct ParamVars {
    std::vector<std::pair<std::string, Var>> vars;
    Var at(const std::string& name) const;
};

ParamVars register_params(Tape& tape, const ParamSet& params);

/// Gradient per registered parameter; entries never touched by the graph get
/// zero tensors. Call after tape.backward().
Gradients collect_gradients(Tape& tape, const ParamVars& vars, const ParamSet& ref);

} // namespace fedphish

#endif
