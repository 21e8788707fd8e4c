// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable approximations of the two discrete steps: the sign function
// is relaxed by a sigmoid, and the binary-to-metric map is replaced by
// inverse-distance-weighted interpolation over anchor configurations with
// known true metric values.

#pragma once

#include <memory>
#include <span>
#include <vector>

#include "uniloss/refactor.hpp"

namespace uniloss {

// Sampled binary configurations with their exact metric values. Immutable
// after construction; duplicates are rejected so an exact hit is unambiguous.
class AnchorSet {
public:
    enum class Provenance { good, bad, nearby };

    AnchorSet(std::vector<BinaryConfiguration> anchors, std::vector<double> values,
              std::vector<Provenance> provenance);

    std::size_t size() const { return anchors_.size(); }
    std::size_t arity() const { return arity_; }
    const BinaryConfiguration& anchor(std::size_t i) const { return anchors_[i]; }
    double value(std::size_t i) const { return values_[i]; }
    Provenance provenance(std::size_t i) const { return provenance_[i]; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<BinaryConfiguration> anchors_;
    std::vector<double> values_;
    std::vector<Provenance> provenance_;
    std::size_t arity_;
};

// b~_i = sigmoid(c_i / temperature); temperature 1 reproduces the bare
// sigmoid relaxation.
ComparisonVector relax(const ComparisonVector& c, double temperature = 1.0);
ad::Value relax(ad::Tape& tape, ad::Value comparisons, double temperature = 1.0);

// Shepard interpolation with weights 1/d (Euclidean). Exactly hits anchor
// values: distances below `exact_hit_distance` short-circuit to the first
// matching anchor's value.
inline constexpr double exact_hit_distance = 1e-12;

double idw_value(std::span<const double> u, const AnchorSet& anchors);
ad::Value idw_value(ad::Tape& tape, ad::Value u, std::shared_ptr<const AnchorSet> anchors);

// The full surrogate: scores -> comparisons -> sigmoid relaxation -> IDW.
// Returns a scalar loss on the tape; for higher-is-better metrics this is the
// negated interpolant, so minimizing it ascends the approximated metric.
ad::Value uniloss_surrogate(ad::Tape& tape, ad::Value scores, const BatchTask& task,
                            std::shared_ptr<const AnchorSet> anchors,
                            double temperature = 1.0);

}  // namespace uniloss
