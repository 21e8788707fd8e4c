// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0

#include "uniloss/interpolate.hpp"

#include <cmath>
#include <unordered_set>

namespace uniloss {

namespace {

struct ConfigHash {
    std::size_t operator()(const BinaryConfiguration& b) const {
        // FNV-1a over the bit bytes
        std::size_t h = 1469598103934665603ull;
        for (auto v : b) {
            h ^= v;
            h *= 1099511628211ull;
        }
        return h;
    }
};

}  // namespace

AnchorSet::AnchorSet(std::vector<BinaryConfiguration> anchors, std::vector<double> values,
                     std::vector<Provenance> provenance)
    : anchors_(std::move(anchors)), values_(std::move(values)),
      provenance_(std::move(provenance)) {
    require(!anchors_.empty(), "anchor set must contain at least one anchor");
    require(values_.size() == anchors_.size() && provenance_.size() == anchors_.size(),
            "anchor set metadata length mismatch");
    arity_ = anchors_[0].size();
    std::unordered_set<BinaryConfiguration, ConfigHash> seen;
    for (std::size_t i = 0; i < anchors_.size(); ++i) {
        require(anchors_[i].size() == arity_, "anchor arity mismatch within set");
        require(std::isfinite(values_[i]), "anchor metric value is not finite");
        require(seen.insert(anchors_[i]).second,
                "duplicate anchor configurations are not allowed");
    }
}

ComparisonVector relax(const ComparisonVector& c, double temperature) {
    require(temperature > 0.0, "relaxation temperature must be positive");
    ComparisonVector out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = ad::sigmoid_scalar(c[i] / temperature);
    return out;
}

ad::Value relax(ad::Tape& tape, ad::Value comparisons, double temperature) {
    (void)tape;
    require(temperature > 0.0, "relaxation temperature must be positive");
    if (temperature == 1.0) return ad::sigmoid(comparisons);
    return ad::sigmoid(ad::mul_scalar(comparisons, 1.0 / temperature));
}

namespace {

struct IdwEval {
    double value = 0.0;
    bool exact_hit = false;
    std::size_t hit_index = 0;
    std::vector<double> weights;  // 1/d per anchor (valid when !exact_hit)
    double weight_sum = 0.0;
};

IdwEval idw_eval(std::span<const double> u, const AnchorSet& anchors) {
    require(u.size() == anchors.arity(),
            "IDW input length " + std::to_string(u.size()) + " does not match anchor arity " +
                std::to_string(anchors.arity()));
    IdwEval ev;
    ev.weights.resize(anchors.size());
    double num = 0.0;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        const BinaryConfiguration& a = anchors.anchor(i);
        double d2 = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j) {
            const double diff = u[j] - static_cast<double>(a[j]);
            d2 += diff * diff;
        }
        const double d = std::sqrt(d2);
        if (d < exact_hit_distance) {
            ev.exact_hit = true;
            ev.hit_index = i;
            ev.value = anchors.value(i);
            return ev;
        }
        ev.weights[i] = 1.0 / d;
        ev.weight_sum += ev.weights[i];
        num += ev.weights[i] * anchors.value(i);
    }
    ev.value = num / ev.weight_sum;
    return ev;
}

}  // namespace

double idw_value(std::span<const double> u, const AnchorSet& anchors) {
    return idw_eval(u, anchors).value;
}

ad::Value idw_value(ad::Tape& tape, ad::Value u, std::shared_ptr<const AnchorSet> anchors) {
    const Tensor& ut = u.tensor();
    IdwEval ev = idw_eval(std::span<const double>(ut.data(), ut.numel()), *anchors);
    const std::size_t uid = u.id;

    if (ev.exact_hit) {
        // On an anchor the interpolant is locally constant along the exact-hit
        // branch; no gradient is propagated.
        return tape.custom(Tensor::scalar(ev.value), {uid},
                           [](ad::Tape&, const Tensor&) {});
    }

    // d e / d u_j = -sum_i (g_i - e) w_i^3 (u_j - a_ij) / W
    return tape.custom(
        Tensor::scalar(ev.value), {uid},
        [uid, anchors = std::move(anchors), ev = std::move(ev)](ad::Tape& t, const Tensor& g) {
            const Tensor& uv = t.value(uid);
            Tensor& gu = t.grad_buffer(uid);
            const double gout = g[0];
            for (std::size_t i = 0; i < anchors->size(); ++i) {
                const double w = ev.weights[i];
                const double coef =
                    -gout * (anchors->value(i) - ev.value) * w * w * w / ev.weight_sum;
                if (coef == 0.0) continue;
                const BinaryConfiguration& a = anchors->anchor(i);
                for (std::size_t j = 0; j < uv.numel(); ++j)
                    gu[j] += coef * (uv[j] - static_cast<double>(a[j]));
            }
        });
}

ad::Value uniloss_surrogate(ad::Tape& tape, ad::Value scores, const BatchTask& task,
                            std::shared_ptr<const AnchorSet> anchors, double temperature) {
    require(anchors != nullptr && anchors->arity() == task.spec.size(),
            "anchor arity does not match the task's comparison count");
    ad::Value c = compute_comparisons(tape, scores, task.spec);
    ad::Value relaxed = relax(tape, c, temperature);
    ad::Value approx = idw_value(tape, relaxed, std::move(anchors));
    return task.oracle.higher_is_better ? ad::mul_scalar(approx, -1.0) : approx;
}

}  // namespace uniloss
