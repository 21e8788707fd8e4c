// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0

#include "uniloss/autodiff.hpp"

#include <cmath>
#include <utility>

#include "uniloss/kernels.hpp"

namespace uniloss::ad {

const Tensor& Value::tensor() const { return tape->value(id); }

Value Tape::leaf(Parameter& p) {
    Node n;
    n.out = p.value;
    n.param = &p;
    return {this, push(std::move(n))};
}

Value Tape::constant(Tensor t) {
    Node n;
    n.out = std::move(t);
    return {this, push(std::move(n))};
}

Value Tape::custom(Tensor out, std::vector<std::size_t> parents, BackwardFn backward) {
    Node n;
    n.out = std::move(out);
    n.parents = std::move(parents);
    n.backward = std::move(backward);
    return {this, push(std::move(n))};
}

std::size_t Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

Tensor& Tape::grad_buffer(std::size_t id) {
    if (grads_[id].numel() == 0) grads_[id] = Tensor::zeros(nodes_[id].out.shape());
    return grads_[id];
}

void Tape::backward(Value root) {
    require(root.tape == this, "backward: value belongs to another tape");
    require(!nodes_.empty(), "backward: empty tape");
    require(nodes_[root.id].out.numel() == 1,
            "backward: root must be scalar, got shape " + nodes_[root.id].out.shape_str());

    grads_.assign(nodes_.size(), Tensor());
    grad_buffer(root.id)[0] = 1.0;

    for (std::size_t id = root.id + 1; id-- > 0;) {
        if (grads_[id].numel() == 0) continue;  // not on any path from root
        Node& n = nodes_[id];
        if (n.param != nullptr)
            kernels::axpy(1.0, grads_[id].data(), n.param->grad.data(), grads_[id].numel());
        if (n.backward) n.backward(*this, grads_[id]);
    }
    grads_.clear();
}

void Tape::reset() {
    nodes_.clear();
    grads_.clear();
}

// ---------------------------------------------------------------------------
// ops
// ---------------------------------------------------------------------------

namespace {

void check_same_tape(Value a, Value b, const char* op) {
    require(a.tape == b.tape, std::string(op) + ": operands from different tapes");
}

}  // namespace

Value matmul(Value a, Value b) {
    check_same_tape(a, b, "matmul");
    const Tensor& at = a.tensor();
    const Tensor& bt = b.tensor();
    require(at.ndim() == 2 && bt.ndim() == 2 && at.cols() == bt.rows(),
            "matmul: incompatible shapes " + at.shape_str() + " vs " + bt.shape_str());
    const std::size_t m = at.rows(), k = at.cols(), n = bt.cols();
    Tensor out({m, n});
    kernels::gemm_nn(m, n, k, at.data(), bt.data(), out.data(), false);
    const std::size_t aid = a.id, bid = b.id;
    return a.tape->custom(std::move(out), {aid, bid},
                          [aid, bid, m, n, k](Tape& t, const Tensor& g) {
                              const Tensor& av = t.value(aid);
                              const Tensor& bv = t.value(bid);
                              kernels::gemm_nt(m, k, n, g.data(), bv.data(),
                                               t.grad_buffer(aid).data(), true);
                              kernels::gemm_tn(k, n, m, av.data(), g.data(),
                                               t.grad_buffer(bid).data(), true);
                          });
}

Value add_bias(Value x, Value bias) {
    check_same_tape(x, bias, "add_bias");
    const Tensor& xt = x.tensor();
    const Tensor& bt = bias.tensor();
    require(xt.ndim() == 2 && bt.numel() == xt.cols(),
            "add_bias: incompatible shapes " + xt.shape_str() + " vs " + bt.shape_str());
    const std::size_t rows = xt.rows(), cols = xt.cols();
    Tensor out({rows, cols});
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out(i, j) = xt(i, j) + bt[j];
    const std::size_t xid = x.id, bid = bias.id;
    return x.tape->custom(std::move(out), {xid, bid},
                          [xid, bid, rows, cols](Tape& t, const Tensor& g) {
                              kernels::axpy(1.0, g.data(), t.grad_buffer(xid).data(),
                                            rows * cols);
                              Tensor& gb = t.grad_buffer(bid);
                              for (std::size_t i = 0; i < rows; ++i)
                                  for (std::size_t j = 0; j < cols; ++j) gb[j] += g(i, j);
                          });
}

Value relu(Value x) {
    const Tensor& xt = x.tensor();
    Tensor out(xt.shape());
    kernels::relu(xt.data(), out.data(), xt.numel());
    const std::size_t xid = x.id;
    return x.tape->custom(std::move(out), {xid}, [xid](Tape& t, const Tensor& g) {
        const Tensor& xv = t.value(xid);
        kernels::relu_backward(xv.data(), g.data(), t.grad_buffer(xid).data(), xv.numel());
    });
}

double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Value sigmoid(Value x) {
    const Tensor& xt = x.tensor();
    Tensor out(xt.shape());
    for (std::size_t i = 0; i < xt.numel(); ++i) out[i] = sigmoid_scalar(xt[i]);
    const std::size_t xid = x.id;
    // d sigmoid = s (1 - s); the closure keeps its own copy of s
    Tensor saved = out;
    return x.tape->custom(std::move(out), {xid},
                          [xid, s = std::move(saved)](Tape& t, const Tensor& g) {
                              Tensor& gx = t.grad_buffer(xid);
                              for (std::size_t i = 0; i < g.numel(); ++i)
                                  gx[i] += g[i] * s[i] * (1.0 - s[i]);
                          });
}

Value sub(Value x, Value y) {
    check_same_tape(x, y, "sub");
    const Tensor& xt = x.tensor();
    const Tensor& yt = y.tensor();
    require_same_shape(xt, yt, "sub");
    Tensor out(xt.shape());
    kernels::sub(xt.data(), yt.data(), out.data(), xt.numel());
    const std::size_t xid = x.id, yid = y.id;
    return x.tape->custom(std::move(out), {xid, yid}, [xid, yid](Tape& t, const Tensor& g) {
        kernels::axpy(1.0, g.data(), t.grad_buffer(xid).data(), g.numel());
        kernels::axpy(-1.0, g.data(), t.grad_buffer(yid).data(), g.numel());
    });
}

Value mul_scalar(Value x, double k) {
    const Tensor& xt = x.tensor();
    Tensor out(xt.shape());
    for (std::size_t i = 0; i < xt.numel(); ++i) out[i] = k * xt[i];
    const std::size_t xid = x.id;
    return x.tape->custom(std::move(out), {xid}, [xid, k](Tape& t, const Tensor& g) {
        kernels::axpy(k, g.data(), t.grad_buffer(xid).data(), g.numel());
    });
}

Value sum(Value x) {
    const Tensor& xt = x.tensor();
    Tensor out = Tensor::scalar(kernels::sum(xt.data(), xt.numel()));
    const std::size_t xid = x.id;
    return x.tape->custom(std::move(out), {xid}, [xid](Tape& t, const Tensor& g) {
        Tensor& gx = t.grad_buffer(xid);
        const double gv = g[0];
        for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += gv;
    });
}

Value mean(Value x) {
    const Tensor& xt = x.tensor();
    const std::size_t n = xt.numel();
    require(n > 0, "mean: empty tensor");
    Tensor out = Tensor::scalar(kernels::sum(xt.data(), n) / static_cast<double>(n));
    const std::size_t xid = x.id;
    return x.tape->custom(std::move(out), {xid}, [xid, n](Tape& t, const Tensor& g) {
        Tensor& gx = t.grad_buffer(xid);
        const double gv = g[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += gv;
    });
}

Value square(Value x) {
    const Tensor& xt = x.tensor();
    Tensor out(xt.shape());
    for (std::size_t i = 0; i < xt.numel(); ++i) out[i] = xt[i] * xt[i];
    const std::size_t xid = x.id;
    return x.tape->custom(std::move(out), {xid}, [xid](Tape& t, const Tensor& g) {
        const Tensor& xv = t.value(xid);
        Tensor& gx = t.grad_buffer(xid);
        for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += 2.0 * xv[i] * g[i];
    });
}

Value gather(Value x, std::vector<std::size_t> indices) {
    const Tensor& xt = x.tensor();
    const std::size_t n = xt.numel();
    Tensor out({indices.size()});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        require(indices[i] < n, "gather: index " + std::to_string(indices[i]) +
                                    " out of range for " + xt.shape_str());
        out[i] = xt[indices[i]];
    }
    const std::size_t xid = x.id;
    return x.tape->custom(std::move(out), {xid},
                          [xid, idx = std::move(indices)](Tape& t, const Tensor& g) {
                              Tensor& gx = t.grad_buffer(xid);
                              for (std::size_t i = 0; i < idx.size(); ++i) gx[idx[i]] += g[i];
                          });
}

// ---------------------------------------------------------------------------
// gradient checking
// ---------------------------------------------------------------------------

GradCheckReport check_gradient(const std::function<Value(Tape&)>& build,
                               std::span<Parameter* const> params, double step,
                               double tolerance) {
    require(step > 0.0, "check_gradient: step must be positive");

    for (Parameter* p : params) p->zero_grad();
    Tape tape;
    Value root = build(tape);
    require(root.tensor().numel() == 1, "check_gradient: computation must be scalar");
    tape.backward(root);

    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (Parameter* p : params) analytic.push_back(p->grad);

    auto eval = [&]() {
        Tape t;
        return build(t).tensor()[0];
    };

    GradCheckReport report;
    report.tolerance = tolerance;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        for (std::size_t i = 0; i < p.value.numel(); ++i) {
            const double orig = p.value[i];
            p.value[i] = orig + step;
            const double fp = eval();
            p.value[i] = orig - step;
            const double fm = eval();
            p.value[i] = orig;
            const double numeric = (fp - fm) / (2.0 * step);
            const double a = analytic[pi][i];
            const double denom = std::max(std::abs(a), std::abs(numeric));
            const double err = denom < 1e-10 ? 0.0 : std::abs(a - numeric) / denom;
            if (err > report.max_rel_error) {
                report.max_rel_error = err;
                report.worst_param = pi;
                report.worst_index = i;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    return report;
}

}  // namespace uniloss::ad
