#include "fedphish/tape.hpp"

#include <algorithm>
#include <cmath>

#include "fedphish/errors.hpp"
#include "fedphish/kernels.hpp"

namespace fedphish {

Tape::Node& Tape::node(Var v) {
    if (!v.valid() || static_cast<std::size_t>(v.idx) >= nodes_.size())
        throw UsageError("tape: invalid variable handle");
    return nodes_[static_cast<std::size_t>(v.idx)];
}

const Tape::Node& Tape::node(Var v) const {
    if (!v.valid() || static_cast<std::size_t>(v.idx) >= nodes_.size())
        throw UsageError("tape: invalid variable handle");
    return nodes_[static_cast<std::size_t>(v.idx)];
}

// push_back may reallocate nodes_: references obtained from value()/node()
// before a push are invalid after it. Ops must copy any dimensions they need
// before pushing and re-resolve through the tape inside pullbacks.
Var Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&)> pullback) {
    nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, std::move(pullback)});
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::leaf(Tensor value) { return push(std::move(value), true, nullptr); }

const Tensor& Tape::grad(Var v) {
    if (!backward_done_) throw UsageError("tape: grad() before backward()");
    return grad_buffer(v);
}

Tensor& Tape::grad_buffer(Var v) {
    Node& n = node(v);
    if (n.grad.size() == 0) n.grad = Tensor::zeros(n.value.shape());
    return n.grad;
}

Var Tape::matmul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_rank2(ta, "matmul");
    require_rank2(tb, "matmul");
    if (ta.cols() != tb.rows())
        throw DimensionError("matmul: " + ta.shape_str() + " x " + tb.shape_str());
    const std::int64_t m = ta.rows(), k = ta.cols(), n = tb.cols();
    Tensor out = Tensor::zeros({m, n});
    kernels::matmul_nn(ta.data(), tb.data(), out.data(), m, k, n, true);
    const bool rg = node(a).requires_grad || node(b).requires_grad;
    Var v = push(std::move(out), rg, nullptr);
    if (rg) {
        node(v).pullback = [a, b, v, m, k, n](Tape& t) {
            const Tensor& dy = t.node(v).grad;
            if (dy.size() == 0) return;
            if (t.node(a).requires_grad) {
                // dA += dY * B^T  ([m,n]*[k,n]^T)
                kernels::matmul_nt(dy.data(), t.value(b).data(), t.grad_buffer(a).data(), m, n, k, true);
            }
            if (t.node(b).requires_grad) {
                // dB += A^T * dY  ([m,k]^T*[m,n])
                kernels::matmul_tn(t.value(a).data(), dy.data(), t.grad_buffer(b).data(), m, k, n, true);
            }
        };
    }
    return v;
}

Var Tape::matmul_nt(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_rank2(ta, "matmul_nt");
    require_rank2(tb, "matmul_nt");
    if (ta.cols() != tb.cols())
        throw DimensionError("matmul_nt: " + ta.shape_str() + " x " + tb.shape_str() + "^T");
    const std::int64_t m = ta.rows(), k = ta.cols(), n = tb.rows();
    Tensor out = Tensor::zeros({m, n});
    kernels::matmul_nt(ta.data(), tb.data(), out.data(), m, k, n, false);
    const bool rg = node(a).requires_grad || node(b).requires_grad;
    Var v = push(std::move(out), rg, nullptr);
    if (rg) {
        node(v).pullback = [a, b, v, m, k, n](Tape& t) {
            const Tensor& dy = t.node(v).grad;
            if (dy.size() == 0) return;
            if (t.node(a).requires_grad) {
                // dA += dY * B   ([m,n]*[n,k])
                kernels::matmul_nn(dy.data(), t.value(b).data(), t.grad_buffer(a).data(), m, n, k, true);
            }
            if (t.node(b).requires_grad) {
                // dB += dY^T * A ([n,m]*[m,k])
                kernels::matmul_tn(dy.data(), t.value(a).data(), t.grad_buffer(b).data(), m, n, k, true);
            }
        };
    }
    return v;
}

Var Tape::add(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "add");
    Tensor out = Tensor::zeros(ta.shape());
    kernels::add(ta.data(), tb.data(), out.data(), ta.size());
    const bool rg = node(a).requires_grad || node(b).requires_grad;
    Var v = push(std::move(out), rg, nullptr);
    if (rg) {
        node(v).pullback = [a, b, v](Tape& t) {
            const Tensor& dy = t.node(v).grad;
            if (dy.size() == 0) return;
            if (t.node(a).requires_grad)
                kernels::axpy(1.0, dy.data(), t.grad_buffer(a).data(), dy.size());
            if (t.node(b).requires_grad)
                kernels::axpy(1.0, dy.data(), t.grad_buffer(b).data(), dy.size());
        };
    }
    return v;
}

Var Tape::sub(Var a, Var b) {
    Var nb = scale(b, -1.0);
    return add(a, nb);
}

Var Tape::add_bias(Var x, Var bias) {
    const Tensor& tx = value(x);
    const Tensor& tb = value(bias);
    require_rank2(tx, "add_bias");
    if (tb.rank() != 1 || tb.size() != tx.cols())
        throw DimensionError("add_bias: bias " + tb.shape_str() + " does not broadcast over " +
                             tx.shape_str());
    const std::int64_t rows = tx.rows(), cols = tx.cols();
    Tensor out = Tensor::zeros(tx.shape());
    kernels::add_row_broadcast(tx.data(), tb.data(), out.data(), rows, cols);
    const bool rg = node(x).requires_grad || node(bias).requires_grad;
    Var v = push(std::move(out), rg, nullptr);
    if (rg) {
        node(v).pullback = [x, bias, v, rows, cols](Tape& t) {
            const Tensor& dy = t.node(v).grad;
            if (dy.size() == 0) return;
            if (t.node(x).requires_grad)
                kernels::axpy(1.0, dy.data(), t.grad_buffer(x).data(), dy.size());
            if (t.node(bias).requires_grad)
                kernels::col_sum_accumulate(dy.data(), t.grad_buffer(bias).data(), rows, cols);
        };
    }
    return v;
}

Var Tape::scale(Var a, double alpha) {
    const Tensor& ta = value(a);
    Tensor out = Tensor::zeros(ta.shape());
    kernels::scale(alpha, ta.data(), out.data(), ta.size());
    const bool rg = node(a).requires_grad;
    Var v = push(std::move(out), rg, nullptr);
    if (rg) {
        node(v).pullback = [a, v, alpha](Tape& t) {
            const Tensor& dy = t.node(v).grad;
            if (dy.size() == 0) return;
            kernels::axpy(alpha, dy.data(), t.grad_buffer(a).data(), dy.size());
        };
    }
    return v;
}

Var Tape::relu(Var a) {
    const Tensor& ta = value(a);
    Tensor out = Tensor::zeros(ta.shape());
    kernels::relu(ta.data(), out.data(), ta.size());
    const bool rg = node(a).requires_grad;
    Var v = push(std::move(out), rg, nullptr);
    if (rg) {
        node(v).pullback = [a, v](Tape& t) {
            const Tensor& dy = t.node(v).grad;
            if (dy.size() == 0) return;
            kernels::relu_backward(t.value(a).data(), dy.data(), t.grad_buffer(a).data(), dy.size());
        };
    }
    return v;
}

Var Tape::tanh(Var a) {
    const Tensor& ta = value(a);
    Tensor out = Tensor::zeros(ta.shape());
    kernels::tanh_forward(ta.data(), out.data(), ta.size());
    const bool rg = node(a).requires_grad;
    Var v = push(std::move(out), rg, nullptr);
    if (rg) {
        node(v).pullback = [a, v](Tape& t) {
            const Tensor& dy = t.node(v).grad;
            if (dy.size() == 0) return;
            kernels::tanh_backward(t.value(v).data(), dy.data(), t.grad_buffer(a).data(), dy.size());
        };
    }
    return v;
}

Var Tape::mul_mask(Var a, Tensor mask) {
    const Tensor& ta = value(a);
    require_same_shape(ta, mask, "mul_mask");
    Tensor out = Tensor::zeros(ta.shape());
    kernels::hadamard(ta.data(), mask.data(), out.data(), ta.size());
    const bool rg = node(a).requires_grad;
    Var v = push(std::move(out), rg, nullptr);
    if (rg) {
        node(v).pullback = [a, v, mask = std::move(mask)](Tape& t) {
            const Tensor& dy = t.node(v).grad;
            if (dy.size() == 0) return;
            // dx += dy * mask
            Tensor& dx = t.grad_buffer(a);
            const double* m = mask.data();
            const double* g = dy.data();
            double* out_ = dx.data();
            for (std::int64_t i = 0; i < dy.size(); ++i) out_[i] += g[i] * m[i];
        };
    }
    return v;
}

Var Tape::softmax_rows(Var a) {
    const Tensor& ta = value(a);
    require_rank2(ta, "softmax");
    if (!ta.all_finite()) throw NumericError("softmax: non-finite logits");
    const std::int64_t rows = ta.rows(), cols = ta.cols();
    Tensor out = Tensor::zeros(ta.shape());
    kernels::softmax_rows(ta.data(), out.data(), rows, cols);
    const bool rg = node(a).requires_grad;
    Var v = push(std::move(out), rg, nullptr);
    if (rg) {
        node(v).pullback = [a, v, rows, cols](Tape& t) {
            const Tensor& dy = t.node(v).grad;
            if (dy.size() == 0) return;
            kernels::softmax_rows_backward(t.value(v).data(), dy.data(),
                                           t.grad_buffer(a).data(), rows, cols);
        };
    }
    return v;
}

Var Tape::slice_cols(Var a, std::int64_t c0, std::int64_t c1) {
    const Tensor& ta = value(a);
    require_rank2(ta, "slice_cols");
    if (c0 < 0 || c1 > ta.cols() || c0 >= c1)
        throw DimensionError("slice_cols: range [" + std::to_string(c0) + ", " +
                             std::to_string(c1) + ") out of " + ta.shape_str());
    const std::int64_t rows = ta.rows(), cols = ta.cols(), w = c1 - c0;
    Tensor out = Tensor::zeros({rows, w});
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t c = 0; c < w; ++c) out.at(r, c) = ta.at(r, c0 + c);
    const bool rg = node(a).requires_grad;
    Var v = push(std::move(out), rg, nullptr);
    if (rg) {
        node(v).pullback = [a, v, rows, cols, c0, w](Tape& t) {
            const Tensor& dy = t.node(v).grad;
            if (dy.size() == 0) return;
            Tensor& dx = t.grad_buffer(a);
            for (std::int64_t r = 0; r < rows; ++r)
                for (std::int64_t c = 0; c < w; ++c)
                    dx.values()[static_cast<std::size_t>(r * cols + c0 + c)] += dy.at(r, c);
        };
    }
    return v;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw UsageError("concat_cols: no parts");
    const std::int64_t rows = value(parts[0]).rows();
    std::int64_t total = 0;
    bool rg = false;
    for (Var p : parts) {
        const Tensor& tp = value(p);
        require_rank2(tp, "concat_cols");
        if (tp.rows() != rows) throw DimensionError("concat_cols: row mismatch");
        total += tp.cols();
        rg = rg || node(p).requires_grad;
    }
    Tensor out = Tensor::zeros({rows, total});
    std::int64_t off = 0;
    for (Var p : parts) {
        const Tensor& tp = value(p);
        for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t c = 0; c < tp.cols(); ++c) out.at(r, off + c) = tp.at(r, c);
        off += tp.cols();
    }
    Var v = push(std::move(out), rg, nullptr);
    if (rg) {
        std::vector<Var> ps = parts;
        node(v).pullback = [ps, v, rows, total](Tape& t) {
            const Tensor& dy = t.node(v).grad;
            if (dy.size() == 0) return;
            std::int64_t off = 0;
            for (Var p : ps) {
                const std::int64_t w = t.value(p).cols();
                if (t.node(p).requires_grad) {
                    Tensor& dx = t.grad_buffer(p);
                    for (std::int64_t r = 0; r < rows; ++r)
                        for (std::int64_t c = 0; c < w; ++c) dx.at(r, c) += dy.at(r, off + c);
                }
                off += w;
            }
        };
    }
    return v;
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw UsageError("concat_rows: no parts");
    const std::int64_t cols = value(parts[0]).cols();
    std::int64_t total = 0;
    bool rg = false;
    for (Var p : parts) {
        const Tensor& tp = value(p);
        require_rank2(tp, "concat_rows");
        if (tp.cols() != cols) throw DimensionError("concat_rows: column mismatch");
        total += tp.rows();
        rg = rg || node(p).requires_grad;
    }
    Tensor out = Tensor::zeros({total, cols});
    std::int64_t off = 0;
    for (Var p : parts) {
        const Tensor& tp = value(p);
        std::copy(tp.data(), tp.data() + tp.size(), out.data() + off * cols);
        off += tp.rows();
    }
    Var v = push(std::move(out), rg, nullptr);
    if (rg) {
        std::vector<Var> ps = parts;
        node(v).pullback = [ps, v, cols](Tape& t) {
            const Tensor& dy = t.node(v).grad;
            if (dy.size() == 0) return;
            std::int64_t off = 0;
            for (Var p : ps) {
                const std::int64_t r = t.value(p).rows();
                if (t.node(p).requires_grad)
                    kernels::axpy(1.0, dy.data() + off * cols, t.grad_buffer(p).data(), r * cols);
                off += r;
            }
        };
    }
    return v;
}

Var Tape::mean_rows(Var a) {
    const Tensor& ta = value(a);
    require_rank2(ta, "mean_rows");
    const std::int64_t rows = ta.rows(), cols = ta.cols();
    if (rows == 0) throw DimensionError("mean_rows: empty input");
    Tensor out = Tensor::zeros({1, cols});
    kernels::col_sum_accumulate(ta.data(), out.data(), rows, cols);
    kernels::scale(1.0 / static_cast<double>(rows), out.data(), out.data(), cols);
    const bool rg = node(a).requires_grad;
    Var v = push(std::move(out), rg, nullptr);
    if (rg) {
        node(v).pullback = [a, v, rows, cols](Tape& t) {
            const Tensor& dy = t.node(v).grad;
            if (dy.size() == 0) return;
            Tensor& dx = t.grad_buffer(a);
            const double inv = 1.0 / static_cast<double>(rows);
            for (std::int64_t r = 0; r < rows; ++r)
                kernels::axpy(inv, dy.data(), dx.data() + r * cols, cols);
        };
    }
    return v;
}

namespace {

// Row-wise log-softmax into `out`; returns nothing. Stable via max shift.
void log_softmax_rows(const Tensor& x, Tensor& out) {
    const std::int64_t rows = x.rows(), cols = x.cols();
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* xr = x.data() + r * cols;
        double* yr = out.data() + r * cols;
        double mx = xr[0];
        for (std::int64_t c = 1; c < cols; ++c) mx = std::max(mx, xr[c]);
        double sum = 0.0;
        for (std::int64_t c = 0; c < cols; ++c) sum += std::exp(xr[c] - mx);
        const double lse = mx + std::log(sum);
        for (std::int64_t c = 0; c < cols; ++c) yr[c] = xr[c] - lse;
    }
}

} // namespace

Var Tape::cross_entropy(Var logits, const std::vector<int>& labels) {
    const Tensor& tl = value(logits);
    require_rank2(tl, "cross_entropy");
    const std::int64_t batch = tl.rows(), classes = tl.cols();
    if (batch < 1) throw UsageError("cross_entropy: empty batch");
    if (static_cast<std::int64_t>(labels.size()) != batch)
        throw UsageError("cross_entropy: " + std::to_string(labels.size()) + " labels for batch " +
                         std::to_string(batch));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes)
            throw DataError("cross_entropy: label " + std::to_string(labels[i]) + " at row " +
                            std::to_string(i) + " outside [0, " + std::to_string(classes) + ")");
    }
    if (!tl.all_finite()) throw NumericError("cross_entropy: non-finite logits");

    Tensor logp = Tensor::zeros(tl.shape());
    log_softmax_rows(tl, logp);
    double loss = 0.0;
    for (std::int64_t r = 0; r < batch; ++r) loss -= logp.at(r, labels[static_cast<std::size_t>(r)]);
    loss /= static_cast<double>(batch);

    const bool rg = node(logits).requires_grad;
    Var v = push(Tensor::scalar(loss), rg, nullptr);
    if (rg) {
        std::vector<int> lab = labels;
        node(v).pullback = [logits, v, lab = std::move(lab), logp = std::move(logp), batch,
                            classes](Tape& t) {
            const Tensor& dy = t.node(v).grad;
            if (dy.size() == 0) return;
            const double up = dy[0] / static_cast<double>(batch);
            Tensor& dx = t.grad_buffer(logits);
            for (std::int64_t r = 0; r < batch; ++r) {
                double* dr = dx.data() + r * classes;
                const double* lr = logp.data() + r * classes;
                for (std::int64_t c = 0; c < classes; ++c) dr[c] += up * std::exp(lr[c]);
                dr[lab[static_cast<std::size_t>(r)]] -= up;
            }
        };
    }
    return v;
}

Var Tape::distillation(const Tensor& old_logits, Var new_logits, double temperature) {
    if (temperature <= 0.0)
        throw ConfigError("distillation: temperature must be > 0, got " +
                          format_double(temperature));
    const Tensor& tn = value(new_logits);
    require_rank2(tn, "distillation");
    require_same_shape(old_logits, tn, "distillation");
    const std::int64_t batch = tn.rows(), classes = tn.cols();

    // p = softmax(old/T), q = softmax(new/T); both via stable log-softmax.
    Tensor old_scaled = Tensor::zeros(old_logits.shape());
    kernels::scale(1.0 / temperature, old_logits.data(), old_scaled.data(), old_logits.size());
    Tensor new_scaled = Tensor::zeros(tn.shape());
    kernels::scale(1.0 / temperature, tn.data(), new_scaled.data(), tn.size());

    Tensor logp = Tensor::zeros(old_scaled.shape());
    Tensor logq = Tensor::zeros(new_scaled.shape());
    log_softmax_rows(old_scaled, logp);
    log_softmax_rows(new_scaled, logq);

    double kl = 0.0;
    Tensor pq_diff = Tensor::zeros(tn.shape()); // q - p, reused by the pullback
    for (std::int64_t r = 0; r < batch; ++r) {
        for (std::int64_t c = 0; c < classes; ++c) {
            const double p = std::exp(logp.at(r, c));
            const double q = std::exp(logq.at(r, c));
            kl += p * (logp.at(r, c) - logq.at(r, c));
            pq_diff.at(r, c) = q - p;
        }
    }
    const double loss = kl * temperature * temperature / static_cast<double>(batch);

    const bool rg = node(new_logits).requires_grad;
    Var v = push(Tensor::scalar(loss), rg, nullptr);
    if (rg) {
        node(v).pullback = [new_logits, v, pq_diff = std::move(pq_diff), temperature,
                            batch](Tape& t) {
            const Tensor& dy = t.node(v).grad;
            if (dy.size() == 0) return;
            // dL/dnew = T * (q - p) / batch
            const double up = dy[0] * temperature / static_cast<double>(batch);
            kernels::axpy(up, pq_diff.data(), t.grad_buffer(new_logits).data(), pq_diff.size());
        };
    }
    return v;
}

void Tape::backward(Var loss) {
    if (nodes_.empty()) throw UsageError("tape: backward on empty tape (no forward recorded)");
    const Node& ln = node(loss);
    if (ln.value.size() != 1)
        throw UsageError("tape: backward target must be scalar, got shape " +
                         ln.value.shape_str());
    grad_buffer(loss)[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (n.requires_grad && n.pullback && n.grad.size() != 0) n.pullback(*this);
    }
    backward_done_ = true;
}

Var ParamVars::at(const std::string& name) const {
    for (const auto& [n, v] : vars)
        if (n == name) return v;
    throw UsageError("param vars: no entry named '" + name + "'");
}

ParamVars register_params(Tape& tape, const ParamSet& params) {
    ParamVars out;
    out.vars.reserve(params.size());
    for (const auto& e : params.entries()) out.vars.emplace_back(e.name, tape.leaf(e.tensor));
    return out;
}

Gradients collect_gradients(Tape& tape, const ParamVars& vars, const ParamSet& ref) {
    Gradients g;
    for (std::size_t i = 0; i < vars.vars.size(); ++i) {
        const auto& [name, var] = vars.vars[i];
        g.add(name, tape.grad(var));
    }
    if (!g.shape_compatible(ref))
        throw DimensionError("collect_gradients: gradients incompatible with reference params");
    return g;
}

} // namespace fedphish
