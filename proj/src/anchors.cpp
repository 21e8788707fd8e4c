// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0

#include "uniloss/anchors.hpp"

#include <cmath>
#include <unordered_set>

namespace uniloss {

namespace {

BinaryConfiguration flipped_from(const BinaryConfiguration& base, int flips,
                                 const ComparisonSpec& spec, bool pixel_mode, Rng& rng) {
    BinaryConfiguration a = base;
    if (pixel_mode && !spec.flip_groups.empty()) {
        const auto& group = spec.flip_groups[rng.below(spec.flip_groups.size())];
        for (auto idx : group) a[idx] ^= 1;
        return a;
    }
    if (flips == 0) return a;
    for (auto idx : rng.sample_without_replacement(static_cast<std::uint32_t>(base.size()),
                                                   static_cast<std::uint32_t>(flips)))
        a[idx] ^= 1;
    return a;
}

void check_flip_count(int flips, std::size_t arity, const char* kind) {
    require(flips <= static_cast<long>(arity), std::string(kind) + " flip count " +
                                                   std::to_string(flips) +
                                                   " exceeds comparison count " +
                                                   std::to_string(arity));
}

}  // namespace

std::vector<BinaryConfiguration> sample_good(const BinaryConfiguration& best,
                                             const AnchorPolicy& policy,
                                             const ComparisonSpec& spec, Rng& rng) {
    policy.validate();
    check_flip_count(policy.good_flips, best.size(), "good anchor");
    std::vector<BinaryConfiguration> out;
    out.reserve(policy.count_per_type);
    for (int i = 0; i < policy.count_per_type; ++i)
        out.push_back(flipped_from(best, policy.good_flips, spec, policy.pose_pixel_mode, rng));
    return out;
}

std::vector<BinaryConfiguration> sample_bad(std::size_t arity, const AnchorPolicy& policy,
                                            Rng& rng) {
    policy.validate();
    require(arity >= 1, "anchor arity must be at least 1");
    std::vector<BinaryConfiguration> out;
    out.reserve(policy.count_per_type);
    for (int i = 0; i < policy.count_per_type; ++i) {
        BinaryConfiguration a(arity);
        std::uint64_t word = 0;
        for (std::size_t j = 0; j < arity; ++j) {
            if (j % 64 == 0) word = rng.next_u64();
            a[j] = static_cast<std::uint8_t>((word >> (j % 64)) & 1u);
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<BinaryConfiguration> sample_nearby(const BinaryConfiguration& current,
                                               const AnchorPolicy& policy,
                                               const ComparisonSpec& spec, Rng& rng) {
    policy.validate();
    check_flip_count(policy.nearby_flips, current.size(), "nearby anchor");
    std::vector<BinaryConfiguration> out;
    out.reserve(policy.count_per_type);
    for (int i = 0; i < policy.count_per_type; ++i)
        out.push_back(
            flipped_from(current, policy.nearby_flips, spec, policy.pose_pixel_mode, rng));
    return out;
}

AnchorSet build_anchor_set(const BatchTask& task, const BinaryConfiguration& current,
                           const AnchorPolicy& policy, Rng& rng) {
    require(current.size() == task.oracle.arity,
            "current configuration length does not match oracle arity");
    require(task.best_configuration.size() == task.oracle.arity,
            "best configuration length does not match oracle arity");

    struct Draw {
        BinaryConfiguration config;
        AnchorSet::Provenance tag;
    };
    std::vector<Draw> draws;
    draws.reserve(3 * static_cast<std::size_t>(policy.count_per_type));
    for (auto& a : sample_good(task.best_configuration, policy, task.spec, rng))
        draws.push_back({std::move(a), AnchorSet::Provenance::good});
    for (auto& a : sample_bad(task.oracle.arity, policy, rng))
        draws.push_back({std::move(a), AnchorSet::Provenance::bad});
    for (auto& a : sample_nearby(current, policy, task.spec, rng))
        draws.push_back({std::move(a), AnchorSet::Provenance::nearby});

    // dedup in draw order, then cache exact metric values
    struct Hash {
        std::size_t operator()(const BinaryConfiguration& b) const {
            std::size_t h = 1469598103934665603ull;
            for (auto v : b) {
                h ^= v;
                h *= 1099511628211ull;
            }
            return h;
        }
    };
    std::unordered_set<BinaryConfiguration, Hash> seen;
    std::vector<BinaryConfiguration> anchors;
    std::vector<double> values;
    std::vector<AnchorSet::Provenance> tags;
    for (auto& d : draws) {
        if (!seen.insert(d.config).second) continue;
        const double v = task.oracle(d.config);
        require(std::isfinite(v), "oracle returned a non-finite anchor value");
        anchors.push_back(std::move(d.config));
        values.push_back(v);
        tags.push_back(d.tag);
    }
    return AnchorSet(std::move(anchors), std::move(values), std::move(tags));
}

}  // namespace uniloss
