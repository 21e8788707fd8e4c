// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0

#include "uniloss/refactor.hpp"

namespace uniloss {

void ComparisonSpec::validate(std::size_t flat_size) const {
    require(!pairs.empty(), "comparison spec is empty");
    require(group_of.size() == pairs.size(), "comparison spec group metadata length mismatch");
    for (const auto& [l, r] : pairs) {
        require(l < flat_size && r < flat_size,
                "comparison index (" + std::to_string(l) + "," + std::to_string(r) +
                    ") out of range for flat score view of length " +
                    std::to_string(flat_size));
        require(l != r, "comparison pairs must reference two distinct scores");
    }
}

ComparisonVector compute_comparisons(const ScoreBatch& s, const ComparisonSpec& spec) {
    spec.validate(s.flat_size());
    ComparisonVector c(spec.size());
    for (std::size_t i = 0; i < spec.size(); ++i)
        c[i] = s.flat(spec.pairs[i].first) - s.flat(spec.pairs[i].second);
    return c;
}

ad::Value compute_comparisons(ad::Tape& tape, ad::Value scores, const ComparisonSpec& spec) {
    (void)tape;
    spec.validate(scores.tensor().numel());
    std::vector<std::size_t> left(spec.size()), right(spec.size());
    for (std::size_t i = 0; i < spec.size(); ++i) {
        left[i] = spec.pairs[i].first;
        right[i] = spec.pairs[i].second;
    }
    return ad::sub(ad::gather(scores, std::move(left)), ad::gather(scores, std::move(right)));
}

BinaryConfiguration harden(const ComparisonVector& c) {
    BinaryConfiguration b(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) b[i] = c[i] > 0.0 ? 1 : 0;
    return b;
}

double evaluate_refactored(const ScoreBatch& s, const BatchTask& task) {
    return task.oracle(harden(compute_comparisons(s, task.spec)));
}

double evaluate_original(const ScoreBatch& s, const BatchTask& task) {
    return task.evaluate_direct(s);
}

}  // namespace uniloss
