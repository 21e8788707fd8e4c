// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0
//
// Task adapters: multiclass accuracy, average precision for unbalanced binary
// classification, and PCKh for the toy single-joint pose task, plus the
// conventional baseline losses (softmax cross-entropy, Gaussian-bump MSE).

#pragma once

#include <cstdint>
#include <vector>

#include "uniloss/refactor.hpp"
#include "uniloss/rng.hpp"

namespace uniloss::tasks {

// ---------------------------------------------------------------------------
// multiclass accuracy
// ---------------------------------------------------------------------------

// Labels are 0-based class ids. One comparison per (example, wrong class):
// c = s[i, y_i] - s[i, j], l = n (p-1). An example counts as correct iff all
// of its p-1 bits are set.
BatchTask multiclass_task(const std::vector<int>& labels, std::size_t p);

// ---------------------------------------------------------------------------
// average precision
// ---------------------------------------------------------------------------

// Scores are n x 1 (one ranking score per example). Comparisons are all
// positive/negative pairs: c = s_pos - s_neg, l = P * N. The oracle fixes the
// positives' relative order to the current score order (descending, ties by
// index), which makes g(h(f(s))) equal standard AP on this batch: the k-th
// positive's overall rank is k plus the number of negatives it loses to.
BatchTask ap_task(const std::vector<std::uint8_t>& positive, const ScoreBatch& current_scores);

// AP of a score ranking (descending, ties by lower index first): the direct
// decoder/evaluator route, also used for whole-split evaluation.
double average_precision(const std::vector<double>& scores,
                         const std::vector<std::uint8_t>& positive);

// ---------------------------------------------------------------------------
// toy pose PCKh
// ---------------------------------------------------------------------------

// One G x G heatmap per image, ground truth is a pixel index. Positive pixels
// are those within Euclidean distance r of the ground truth; comparisons are
// all (positive, negative) pixel pairs per image. A heatmap is correct iff
// some positive pixel beats every negative pixel (argmax lands inside the
// positive set). flip_groups holds, per pixel, the comparisons touching it.
BatchTask pose_task(const std::vector<int>& joint_pixels, std::size_t grid, double radius);

// Positive pixel set for one joint: pixels within distance radius, row-major.
std::vector<std::uint32_t> pose_positive_set(int joint_pixel, std::size_t grid, double radius);

// ---------------------------------------------------------------------------
// partial-binary subsampling
// ---------------------------------------------------------------------------

// Restricts a task to `fraction` of its comparison indices (uniform, without
// replacement, at least one kept). The restricted oracle scatters the kept
// bits into an all-ones template and evaluates the full metric, so the
// all-ones configuration stays optimal.
BatchTask subsample_task(const BatchTask& task, double fraction, Rng& rng);

// ---------------------------------------------------------------------------
// baseline losses
// ---------------------------------------------------------------------------

// Mean softmax cross-entropy over the batch; scores is n x p on the tape.
ad::Value cross_entropy(ad::Tape& tape, ad::Value scores, const std::vector<int>& labels);

struct GaussianHeatmapTarget {
    double sigma = 1.0;    // bump standard deviation in pixels; 0 = delta target
    int bump_size = 7;     // window width; bump is zero outside it
};

// Target heatmaps (n x G^2, peak 1 at the ground-truth pixel) for the MSE
// baseline.
Tensor heatmap_targets(const std::vector<int>& joint_pixels, std::size_t grid,
                       const GaussianHeatmapTarget& target);

// Mean squared error between predicted and target heatmaps.
ad::Value mse_heatmap(ad::Tape& tape, ad::Value scores, const Tensor& targets);

}  // namespace uniloss::tasks
