#include "fedphish/ops.hpp"

#include <cmath>

#include "fedphish/errors.hpp"
#include "fedphish/kernels.hpp"

namespace fedphish::nn {

Var linear(Tape& tape, Var x, Var W, Var b) {
    return tape.add_bias(tape.matmul(x, W), b);
}

Var multi_head_attention(Tape& tape, Var q, Var k, Var v, int heads, const AttentionProj& proj,
                         std::vector<Tensor>* attn_weights) {
    const Tensor& tq = tape.value(q);
    require_rank2(tq, "multi_head_attention");
    const std::int64_t d = tq.cols();
    if (heads < 1) throw ConfigError("multi_head_attention: heads must be >= 1");
    if (d % heads != 0)
        throw ConfigError("multi_head_attention: model dim " + std::to_string(d) +
                          " not divisible by " + std::to_string(heads) + " heads");
    for (Var p : {proj.wq, proj.wk, proj.wv, proj.wo}) {
        const Tensor& tp = tape.value(p);
        if (tp.rank() != 2 || tp.rows() != d || tp.cols() != d)
            throw DimensionError("multi_head_attention: projection must be [" + std::to_string(d) +
                                 ", " + std::to_string(d) + "], got " + tp.shape_str());
    }
    const std::int64_t head_dim = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    Var qp = tape.matmul(q, proj.wq);
    Var kp = tape.matmul(k, proj.wk);
    Var vp = tape.matmul(v, proj.wv);

    std::vector<Var> head_outs;
    head_outs.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        const std::int64_t c0 = h * head_dim, c1 = (h + 1) * head_dim;
        Var qh = tape.slice_cols(qp, c0, c1);
        Var kh = tape.slice_cols(kp, c0, c1);
        Var vh = tape.slice_cols(vp, c0, c1);
        Var scores = tape.scale(tape.matmul_nt(qh, kh), scale);
        Var weights = tape.softmax_rows(scores);
        if (attn_weights) attn_weights->push_back(tape.value(weights));
        head_outs.push_back(tape.matmul(weights, vh));
    }
    Var concat = heads == 1 ? head_outs[0] : tape.concat_cols(head_outs);
    return tape.matmul(concat, proj.wo);
}

Tensor softmax(const Tensor& logits) {
    require_rank2(logits, "softmax");
    if (!logits.all_finite()) throw NumericError("softmax: non-finite logits");
    Tensor out = Tensor::zeros(logits.shape());
    kernels::softmax_rows(logits.data(), out.data(), logits.rows(), logits.cols());
    return out;
}

double cross_entropy_value(const Tensor& logits, const std::vector<int>& labels) {
    const auto per = cross_entropy_per_example(logits, labels);
    double sum = 0.0;
    for (double l : per) sum += l;
    return sum / static_cast<double>(per.size());
}

std::vector<double> cross_entropy_per_example(const Tensor& logits,
                                              const std::vector<int>& labels) {
    require_rank2(logits, "cross_entropy");
    const std::int64_t batch = logits.rows(), classes = logits.cols();
    if (batch < 1) throw UsageError("cross_entropy: empty batch");
    if (static_cast<std::int64_t>(labels.size()) != batch)
        throw UsageError("cross_entropy: label/batch length mismatch");
    std::vector<double> out(static_cast<std::size_t>(batch));
    for (std::int64_t r = 0; r < batch; ++r) {
        const int lab = labels[static_cast<std::size_t>(r)];
        if (lab < 0 || lab >= classes)
            throw DataError("cross_entropy: label " + std::to_string(lab) + " at row " +
                            std::to_string(r) + " outside [0, " + std::to_string(classes) + ")");
        const double* xr = logits.data() + r * classes;
        double mx = xr[0];
        for (std::int64_t c = 1; c < classes; ++c) mx = std::max(mx, xr[c]);
        double sum = 0.0;
        for (std::int64_t c = 0; c < classes; ++c) sum += std::exp(xr[c] - mx);
        out[static_cast<std::size_t>(r)] = mx + std::log(sum) - xr[lab];
    }
    return out;
}

} // namespace fedphish::nn
