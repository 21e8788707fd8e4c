// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0
//
// Interpolation fidelity study: how well the IDW surrogate tracks the true
// metric for binary configurations at increasing Hamming distance from the
// configurations encountered while iterating a trained model over batches.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uniloss/train.hpp"

namespace uniloss::fidelity {

struct FidelityRow {
    double fraction = 0.0;          // Hamming distance as a fraction of l
    double mean_l2 = 0.0;           // mean |approx - true|
    double rank_correlation = 0.0;  // Spearman
    std::size_t samples = 0;
};

struct FidelityReport {
    std::vector<FidelityRow> rows;  // sorted by ascending fraction
};

// Tie-aware Spearman rank correlation (Pearson over fractional ranks).
// Defined as 0 when either sequence is constant.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

inline const std::vector<double> default_fractions = {0.0,       1.0 / 512, 1.0 / 128,
                                                      1.0 / 32,  1.0 / 8,   1.0 / 2};

// For each fraction f: iterate batches, draw anchors exactly as training
// would, flip ceil(f*l) random bits of the encountered configuration, and
// record (surrogate value, true metric) pairs until `samples_per_fraction`
// pairs are collected.
FidelityReport run_fidelity(const train::Mlp& model, const data::Dataset& ds,
                            const train::RunConfig& cfg, std::vector<double> fractions,
                            std::size_t samples_per_fraction, std::uint64_t seed);

void write_csv(const std::string& path, const FidelityReport& report);

}  // namespace uniloss::fidelity
