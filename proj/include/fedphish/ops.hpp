#ifndef FEDPHISH_OPS_HPP
#define FEDPHISH_OPS_HPP

#include <vector>

#include "fedphish/params.hpp"
#include "fedphish/tape.hpp"

namespace fedphish::nn {

/// y = x W + b, bias broadcast over the batch.
Var linear(Tape& tape, Var x, Var W, Var b);

/// Projection weights for one multi-head attention block: query/key/value/
/// output matrices, each [d, d].
struct AttentionProj {
    Var wq, wk, wv, wo;
};

/// Scaled dot-product multi-head self/cross attention over a [seq, d]
/// sequence. Scale is 1/sqrt(d/heads). Heads are column slices of the
/// projected q/k/v; outputs are concatenated and projected by wo.
/// When `attn_weights` is non-null, the per-head attention matrices
/// ([seq, seq], rows summing to 1) are copied out for inspection.
Var multi_head_attention(Tape& tape, Var q, Var k, Var v, int heads, const AttentionProj& proj,
                         std::vector<Tensor>* attn_weights = nullptr);

/// Tensor-level row softmax with max subtraction (no tape).
Tensor softmax(const Tensor& logits);

/// Cross-entropy of already-computed logits against labels, no tape.
double cross_entropy_value(const Tensor& logits, const std::vector<int>& labels);

/// Per-example cross-entropy losses (used by MIR's interference scoring).
std::vector<double> cross_entropy_per_example(const Tensor& logits,
                                              const std::vector<int>& labels);

} // namespace fedphish::nn

#endif
