// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0
//
// Per-step anchor generation: good anchors flipped from the metric-optimal
// configuration, bad anchors sampled uniformly, nearby anchors flipped from
// the current configuration. Pixel mode (pose) flips all comparisons of one
// randomly chosen pixel instead of individual bits.

#pragma once

#include "uniloss/interpolate.hpp"
#include "uniloss/refactor.hpp"
#include "uniloss/rng.hpp"

namespace uniloss {

struct AnchorPolicy {
    int count_per_type = 16;
    int good_flips = 1;
    int nearby_flips = 1;
    bool pose_pixel_mode = false;

    void validate() const {
        require(count_per_type >= 1, "anchor count per type must be at least 1");
        require(good_flips >= 0 && nearby_flips >= 0, "flip counts must be non-negative");
    }
};

// Each anchor differs from `best` in exactly good_flips uniformly chosen
// positions (or in one pixel group in pixel mode).
std::vector<BinaryConfiguration> sample_good(const BinaryConfiguration& best,
                                             const AnchorPolicy& policy,
                                             const ComparisonSpec& spec, Rng& rng);

// Every bit i.i.d. uniform over {0,1}.
std::vector<BinaryConfiguration> sample_bad(std::size_t arity, const AnchorPolicy& policy,
                                            Rng& rng);

// Like sample_good but flipped from the current configuration.
std::vector<BinaryConfiguration> sample_nearby(const BinaryConfiguration& current,
                                               const AnchorPolicy& policy,
                                               const ComparisonSpec& spec, Rng& rng);

// Union of the three families, deduplicated in draw order, with exact metric
// values cached from the task oracle.
AnchorSet build_anchor_set(const BatchTask& task, const BinaryConfiguration& current,
                           const AnchorPolicy& policy, Rng& rng);

}  // namespace uniloss
