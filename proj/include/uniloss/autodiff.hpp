// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode autodiff over dense double tensors, define-by-run: each
// mini-batch builds a fresh tape, backward() walks it once in reverse node
// order. Node ids increase in creation order, so the tape is topologically
// sorted by construction.

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "uniloss/tensor.hpp"

namespace uniloss::ad {

class Tape;

// Handle to a tape node; cheap to copy, valid until Tape::reset().
struct Value {
    Tape* tape = nullptr;
    std::size_t id = 0;
    const Tensor& tensor() const;
};

// Trainable tensor with its gradient accumulator. Lives outside the tape and
// survives across mini-batches.
struct Parameter {
    Tensor value;
    Tensor grad;

    explicit Parameter(Tensor v) : value(std::move(v)), grad(Tensor::zeros(value.shape())) {}

    void zero_grad() {
        for (auto& g : grad.vec()) g = 0.0;
    }
};

class Tape {
public:
    // Backward rule: add this node's contribution to its parents' gradient
    // buffers (tape.grad_buffer(parent_id)) given the upstream gradient.
    using BackwardFn = std::function<void(Tape&, const Tensor& upstream)>;

    // Leaf bound to a parameter; backward() accumulates into p.grad.
    Value leaf(Parameter& p);

    // Constant input; no gradient flows into it.
    Value constant(Tensor t);

    // Escape hatch for fused ops (IDW interpolation, softmax cross-entropy):
    // the caller supplies the forward result and the backward rule.
    Value custom(Tensor out, std::vector<std::size_t> parents, BackwardFn backward);

    // Runs reverse accumulation from a scalar root into Parameter::grad.
    // May be called repeatedly on the same tape; each call re-accumulates.
    void backward(Value root);

    // Drops all nodes; outstanding Value handles become invalid.
    void reset();

    std::size_t size() const { return nodes_.size(); }
    const Tensor& value(std::size_t id) const { return nodes_[id].out; }

    // Gradient accumulator for a node, allocated (zeroed) on first touch
    // during backward. Only meaningful inside backward rules.
    Tensor& grad_buffer(std::size_t id);

private:
    struct Node {
        Tensor out;
        std::vector<std::size_t> parents;
        Parameter* param = nullptr;
        BackwardFn backward;
    };

    std::size_t push(Node n);

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;

    friend struct Value;
};

// ---------------------------------------------------------------------------
// Forward ops. Inputs are never mutated; every op records one tape node.
// ---------------------------------------------------------------------------

Value matmul(Value a, Value b);              // [m x k] * [k x n]
Value add_bias(Value x, Value bias);         // rows of x + bias
Value relu(Value x);
Value sigmoid(Value x);                      // numerically stable, elementwise
Value sub(Value x, Value y);                 // elementwise, same shape
Value mul_scalar(Value x, double k);
Value sum(Value x);                          // scalar
Value mean(Value x);                         // scalar
Value square(Value x);
Value gather(Value x, std::vector<std::size_t> indices);  // flat-view gather

// Stable scalar sigmoid shared with the non-tape paths.
double sigmoid_scalar(double x);

// ---------------------------------------------------------------------------
// Finite-difference gradient checking
// ---------------------------------------------------------------------------

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_param = 0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double tolerance = 0.0;

    bool pass() const { return max_rel_error < tolerance; }
};

// Compares reverse-mode gradients of the scalar computation `build` against
// central finite differences over every coordinate of `params`.
GradCheckReport check_gradient(const std::function<Value(Tape&)>& build,
                               std::span<Parameter* const> params,
                               double step = 1e-5, double tolerance = 1e-4);

}  // namespace uniloss::ad
