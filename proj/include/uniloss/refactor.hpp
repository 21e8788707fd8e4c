// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0
//
// Refactored evaluation pipeline: network scores -> pairwise comparisons ->
// binary configuration -> metric. The comparison builder isolates every
// discrete decision of a task metric into signs of score differences, so the
// metric becomes a pure function of a bit vector and both evaluation routes
// (direct decoder/evaluator vs. refactored) can be cross-checked exactly.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "uniloss/autodiff.hpp"
#include "uniloss/tensor.hpp"

namespace uniloss {

// Real-valued network outputs for one mini-batch: n examples, d outputs each.
struct ScoreBatch {
    Tensor scores;  // n x d

    explicit ScoreBatch(Tensor t) : scores(std::move(t)) {
        require(scores.ndim() == 2 && scores.rows() >= 1 && scores.cols() >= 1,
                "score batch must be a nonempty n x d matrix, got " + scores.shape_str());
        require(scores.all_finite(), "score batch contains non-finite values");
    }

    std::size_t n() const { return scores.rows(); }
    std::size_t d() const { return scores.cols(); }
    std::size_t flat_size() const { return scores.numel(); }
    double flat(std::size_t i) const { return scores[i]; }
};

// Index pairs defining the comparison vector c_i = s[left_i] - s[right_i],
// plus group metadata (example id per comparison) used for subsampling and,
// for the pose task, pixel-level flip groups.
struct ComparisonSpec {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    std::vector<std::uint32_t> group_of;
    std::vector<std::vector<std::uint32_t>> flip_groups;  // empty unless pixel-structured

    std::size_t size() const { return pairs.size(); }
    void validate(std::size_t flat_size) const;
};

using ComparisonVector = std::vector<double>;
using BinaryConfiguration = std::vector<std::uint8_t>;

// Exact metric over binary configurations. Pure and deterministic; anchor
// values are cached from it, so it must be the true metric, not an
// approximation.
struct MetricOracle {
    std::size_t arity = 0;
    bool higher_is_better = true;
    std::function<double(const BinaryConfiguration&)> eval;

    double operator()(const BinaryConfiguration& b) const {
        require(b.size() == arity, "oracle arity " + std::to_string(arity) +
                                       " does not match configuration length " +
                                       std::to_string(b.size()));
        return eval(b);
    }
};

// One task instantiated for one mini-batch: the comparison spec, the exact
// metric oracle over its bits, the metric-optimal configuration, and the
// direct decoder/evaluator route used for equivalence checks.
struct BatchTask {
    std::string name;
    ComparisonSpec spec;
    MetricOracle oracle;
    BinaryConfiguration best_configuration;
    std::function<double(const ScoreBatch&)> evaluate_direct;
};

// c_i = s[left_i] - s[right_i]
ComparisonVector compute_comparisons(const ScoreBatch& s, const ComparisonSpec& spec);

// Differentiable version; scores is the n x d output node of the network.
ad::Value compute_comparisons(ad::Tape& tape, ad::Value scores, const ComparisonSpec& spec);

// b_i = [c_i > 0]; ties harden to 0.
BinaryConfiguration harden(const ComparisonVector& c);

// g(h(f(s)))
double evaluate_refactored(const ScoreBatch& s, const BatchTask& task);

// xi(delta(s)) via the task's direct route
double evaluate_original(const ScoreBatch& s, const BatchTask& task);

}  // namespace uniloss
