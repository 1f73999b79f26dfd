#ifndef FEDPHISH_ENCODER_HPP
#define FEDPHISH_ENCODER_HPP

#include "fedphish/ops.hpp"
#include "fedphish/tape.hpp"

namespace fedphish {

/// One attention encoder block over a [seq, hidden] sequence:
///   r = h + linear(h); out = r + multi_head_attention(r, r, r).
/// Zeroing the linear weights/bias and the attention output projection
/// reduces the block to the identity.
Var encoder_layer(Tape& tape, Var h, Var linear_w, Var linear_b, const nn::AttentionProj& proj,
                  int heads);

} // namespace fedphish

#endif
