// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0

#include "uniloss/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

namespace uniloss::tasks {

namespace {

// argmax with ties resolved to the lowest index
std::size_t argmax_row(const ScoreBatch& s, std::size_t row) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < s.d(); ++j)
        if (s.scores(row, j) > s.scores(row, best)) best = j;
    return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// multiclass
// ---------------------------------------------------------------------------

BatchTask multiclass_task(const std::vector<int>& labels, std::size_t p) {
    require(p >= 2, "multiclass task needs at least 2 classes");
    require(!labels.empty(), "multiclass task needs at least one example");
    const std::size_t n = labels.size();
    for (int y : labels)
        require(y >= 0 && static_cast<std::size_t>(y) < p,
                "label " + std::to_string(y) + " outside [0," + std::to_string(p) + ")");

    BatchTask task;
    task.name = "multiclass";
    const std::size_t per_example = p - 1;
    task.spec.pairs.reserve(n * per_example);
    task.spec.group_of.reserve(n * per_example);
    for (std::size_t i = 0; i < n; ++i) {
        const auto y = static_cast<std::uint32_t>(labels[i]);
        for (std::uint32_t j = 0; j < p; ++j) {
            if (j == y) continue;
            task.spec.pairs.emplace_back(static_cast<std::uint32_t>(i * p) + y,
                                         static_cast<std::uint32_t>(i * p) + j);
            task.spec.group_of.push_back(static_cast<std::uint32_t>(i));
        }
    }

    task.oracle.arity = n * per_example;
    task.oracle.eval = [n, per_example](const BinaryConfiguration& b) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < n; ++i) {
            bool all = true;
            for (std::size_t j = 0; j < per_example; ++j)
                if (!b[i * per_example + j]) {
                    all = false;
                    break;
                }
            correct += all;
        }
        return static_cast<double>(correct) / static_cast<double>(n);
    };

    task.best_configuration.assign(task.oracle.arity, 1);

    task.evaluate_direct = [labels, p, n](const ScoreBatch& s) {
        require(s.n() == n && s.d() == p, "multiclass direct eval: scores " + s.scores.shape_str() +
                                              " do not match batch");
        std::size_t correct = 0;
        for (std::size_t i = 0; i < n; ++i)
            correct += argmax_row(s, i) == static_cast<std::size_t>(labels[i]);
        return static_cast<double>(correct) / static_cast<double>(n);
    };
    return task;
}

// ---------------------------------------------------------------------------
// average precision
// ---------------------------------------------------------------------------

double average_precision(const std::vector<double>& scores,
                         const std::vector<std::uint8_t>& positive) {
    require(scores.size() == positive.size(), "average_precision: length mismatch");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (positive[order[rank]]) {
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    require(hits > 0, "average_precision: no positives in set");
    return ap / static_cast<double>(hits);
}

BatchTask ap_task(const std::vector<std::uint8_t>& positive, const ScoreBatch& current_scores) {
    const std::size_t n = positive.size();
    require(current_scores.d() == 1 && current_scores.n() == n,
            "ap task expects n x 1 ranking scores, got " + current_scores.scores.shape_str());
    std::vector<std::uint32_t> pos, neg;
    for (std::uint32_t i = 0; i < n; ++i) (positive[i] ? pos : neg).push_back(i);
    require(!pos.empty() && !neg.empty(),
            "AP undefined: batch needs at least one positive and one negative (got " +
                std::to_string(pos.size()) + " positives, " + std::to_string(neg.size()) +
                " negatives)");

    // Reference order of positives: current score descending, ties by index.
    // Freezing it here makes the oracle's ranking formula coincide with
    // standard AP on this batch's scores.
    std::stable_sort(pos.begin(), pos.end(), [&](std::uint32_t a, std::uint32_t b) {
        return current_scores.flat(a) > current_scores.flat(b);
    });

    BatchTask task;
    task.name = "binary-ap";
    const std::size_t num_pos = pos.size(), num_neg = neg.size();
    task.spec.pairs.reserve(num_pos * num_neg);
    task.spec.group_of.reserve(num_pos * num_neg);
    for (std::uint32_t k = 0; k < num_pos; ++k)
        for (std::uint32_t j = 0; j < num_neg; ++j) {
            task.spec.pairs.emplace_back(pos[k], neg[j]);
            task.spec.group_of.push_back(k);
        }

    task.oracle.arity = num_pos * num_neg;
    task.oracle.eval = [num_pos, num_neg](const BinaryConfiguration& b) {
        double ap = 0.0;
        for (std::size_t k = 0; k < num_pos; ++k) {
            std::size_t lost = 0;
            for (std::size_t j = 0; j < num_neg; ++j) lost += b[k * num_neg + j] == 0;
            ap += static_cast<double>(k + 1) / static_cast<double>(k + 1 + lost);
        }
        return ap / static_cast<double>(num_pos);
    };

    task.best_configuration.assign(task.oracle.arity, 1);

    task.evaluate_direct = [positive](const ScoreBatch& s) {
        std::vector<double> col(s.n());
        for (std::size_t i = 0; i < s.n(); ++i) col[i] = s.scores(i, 0);
        return average_precision(col, positive);
    };
    return task;
}

// ---------------------------------------------------------------------------
// toy pose
// ---------------------------------------------------------------------------

std::vector<std::uint32_t> pose_positive_set(int joint_pixel, std::size_t grid, double radius) {
    require(joint_pixel >= 0 && static_cast<std::size_t>(joint_pixel) < grid * grid,
            "joint pixel " + std::to_string(joint_pixel) + " outside " +
                std::to_string(grid) + "x" + std::to_string(grid) + " grid");
    const long r0 = joint_pixel / static_cast<long>(grid);
    const long c0 = joint_pixel % static_cast<long>(grid);
    const long rr = static_cast<long>(std::floor(radius));
    const double r2 = radius * radius;
    std::vector<std::uint32_t> out;
    for (long dr = -rr; dr <= rr; ++dr) {
        const long row = r0 + dr;
        if (row < 0 || row >= static_cast<long>(grid)) continue;
        for (long dc = -rr; dc <= rr; ++dc) {
            const long col = c0 + dc;
            if (col < 0 || col >= static_cast<long>(grid)) continue;
            if (static_cast<double>(dr * dr + dc * dc) <= r2)
                out.push_back(static_cast<std::uint32_t>(row * static_cast<long>(grid) + col));
        }
    }
    return out;  // ascending by construction
}

BatchTask pose_task(const std::vector<int>& joint_pixels, std::size_t grid, double radius) {
    require(grid >= 2, "pose grid must be at least 2x2");
    require(!joint_pixels.empty(), "pose task needs at least one image");
    const std::size_t n = joint_pixels.size();
    const std::size_t m = grid * grid;

    std::vector<std::vector<std::uint32_t>> pos_sets(n);
    std::vector<std::vector<std::uint32_t>> neg_sets(n);
    for (std::size_t k = 0; k < n; ++k) {
        pos_sets[k] = pose_positive_set(joint_pixels[k], grid, radius);
        require(pos_sets[k].size() < m, "pose radius covers the whole grid; no comparisons");
        std::vector<bool> is_pos(m, false);
        for (auto p : pos_sets[k]) is_pos[p] = true;
        for (std::uint32_t p = 0; p < m; ++p)
            if (!is_pos[p]) neg_sets[k].push_back(p);
    }

    BatchTask task;
    task.name = "pose";
    std::vector<std::vector<std::uint32_t>> pixel_groups(n * m);
    std::vector<std::size_t> image_offset(n + 1, 0);
    for (std::size_t k = 0; k < n; ++k)
        image_offset[k + 1] = image_offset[k] + pos_sets[k].size() * neg_sets[k].size();
    task.spec.pairs.reserve(image_offset[n]);
    task.spec.group_of.reserve(image_offset[n]);
    for (std::size_t k = 0; k < n; ++k) {
        const auto base = static_cast<std::uint32_t>(k * m);
        for (std::uint32_t i : pos_sets[k])
            for (std::uint32_t j : neg_sets[k]) {
                const auto comp = static_cast<std::uint32_t>(task.spec.pairs.size());
                task.spec.pairs.emplace_back(base + i, base + j);
                task.spec.group_of.push_back(static_cast<std::uint32_t>(k));
                pixel_groups[k * m + i].push_back(comp);
                pixel_groups[k * m + j].push_back(comp);
            }
    }
    task.spec.flip_groups = std::move(pixel_groups);

    task.oracle.arity = image_offset[n];
    std::vector<std::size_t> pos_count(n), neg_count(n);
    for (std::size_t k = 0; k < n; ++k) {
        pos_count[k] = pos_sets[k].size();
        neg_count[k] = neg_sets[k].size();
    }
    task.oracle.eval = [n, pos_count, neg_count, image_offset](const BinaryConfiguration& b) {
        std::size_t correct = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t nn = neg_count[k];
            bool hit = false;
            for (std::size_t i = 0; i < pos_count[k] && !hit; ++i) {
                const std::size_t row = image_offset[k] + i * nn;
                bool all = true;
                for (std::size_t j = 0; j < nn; ++j)
                    if (!b[row + j]) {
                        all = false;
                        break;
                    }
                hit = all;
            }
            correct += hit;
        }
        return static_cast<double>(correct) / static_cast<double>(n);
    };

    task.best_configuration.assign(task.oracle.arity, 1);

    task.evaluate_direct = [pos_sets, n, m](const ScoreBatch& s) {
        require(s.n() == n && s.d() == m,
                "pose direct eval: scores " + s.scores.shape_str() + " do not match batch");
        std::size_t correct = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t best = argmax_row(s, k);
            correct += std::binary_search(pos_sets[k].begin(), pos_sets[k].end(),
                                          static_cast<std::uint32_t>(best));
        }
        return static_cast<double>(correct) / static_cast<double>(n);
    };
    return task;
}

// ---------------------------------------------------------------------------
// partial-binary subsampling
// ---------------------------------------------------------------------------

BatchTask subsample_task(const BatchTask& task, double fraction, Rng& rng) {
    require(fraction > 0.0 && fraction <= 1.0, "subsample fraction must be in (0,1]");
    const std::size_t l = task.spec.size();
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(l))));
    if (keep >= l) return task;

    auto picked = rng.sample_without_replacement(static_cast<std::uint32_t>(l),
                                                 static_cast<std::uint32_t>(keep));
    std::sort(picked.begin(), picked.end());

    BatchTask sub;
    sub.name = task.name + "/partial";
    sub.spec.pairs.reserve(keep);
    sub.spec.group_of.reserve(keep);
    std::vector<std::uint32_t> new_index(l, UINT32_MAX);
    for (std::size_t i = 0; i < picked.size(); ++i) {
        new_index[picked[i]] = static_cast<std::uint32_t>(i);
        sub.spec.pairs.push_back(task.spec.pairs[picked[i]]);
        sub.spec.group_of.push_back(task.spec.group_of[picked[i]]);
    }
    for (const auto& group : task.spec.flip_groups) {
        std::vector<std::uint32_t> g;
        for (auto c : group)
            if (new_index[c] != UINT32_MAX) g.push_back(new_index[c]);
        if (!g.empty()) sub.spec.flip_groups.push_back(std::move(g));
    }

    // Missing comparisons are treated as already satisfied, so all-ones stays
    // the optimum of the restricted metric.
    auto full_oracle = std::make_shared<MetricOracle>(task.oracle);
    auto kept = std::make_shared<std::vector<std::uint32_t>>(std::move(picked));
    sub.oracle.arity = keep;
    sub.oracle.higher_is_better = task.oracle.higher_is_better;
    sub.oracle.eval = [full_oracle, kept, l](const BinaryConfiguration& b) {
        BinaryConfiguration full(l, 1);
        for (std::size_t i = 0; i < kept->size(); ++i) full[(*kept)[i]] = b[i];
        return (*full_oracle)(full);
    };

    sub.best_configuration.assign(keep, 1);
    sub.evaluate_direct = task.evaluate_direct;
    return sub;
}

// ---------------------------------------------------------------------------
// baselines
// ---------------------------------------------------------------------------

ad::Value cross_entropy(ad::Tape& tape, ad::Value scores, const std::vector<int>& labels) {
    const Tensor& st = scores.tensor();
    require(st.ndim() == 2, "cross_entropy: scores must be 2-d, got " + st.shape_str());
    const std::size_t n = st.rows(), p = st.cols();
    require(p >= 2, "cross_entropy needs at least 2 classes");
    require(labels.size() == n, "cross_entropy: label count does not match batch");
    for (int y : labels)
        require(y >= 0 && static_cast<std::size_t>(y) < p,
                "label " + std::to_string(y) + " outside [0," + std::to_string(p) + ")");

    // stable log-softmax; softmax matrix is kept for the backward rule
    Tensor softmax({n, p});
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double mx = st(i, 0);
        for (std::size_t j = 1; j < p; ++j) mx = std::max(mx, st(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            softmax(i, j) = std::exp(st(i, j) - mx);
            z += softmax(i, j);
        }
        for (std::size_t j = 0; j < p; ++j) softmax(i, j) /= z;
        loss += mx + std::log(z) - st(i, static_cast<std::size_t>(labels[i]));
    }
    loss /= static_cast<double>(n);

    const std::size_t sid = scores.id;
    return tape.custom(
        Tensor::scalar(loss), {sid},
        [sid, n, p, labels, sm = std::move(softmax)](ad::Tape& t, const Tensor& g) {
            Tensor& gs = t.grad_buffer(sid);
            const double scale = g[0] / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < p; ++j) {
                    const double onehot = static_cast<std::size_t>(labels[i]) == j ? 1.0 : 0.0;
                    gs(i, j) += scale * (sm(i, j) - onehot);
                }
        });
}

Tensor heatmap_targets(const std::vector<int>& joint_pixels, std::size_t grid,
                       const GaussianHeatmapTarget& target) {
    require(target.bump_size >= 1, "bump size must be at least 1");
    const std::size_t n = joint_pixels.size();
    const std::size_t m = grid * grid;
    Tensor out({n, m});
    const int half = target.bump_size / 2;
    for (std::size_t k = 0; k < n; ++k) {
        const int joint = joint_pixels[k];
        require(joint >= 0 && static_cast<std::size_t>(joint) < m,
                "joint pixel outside grid in heatmap target");
        const int r0 = joint / static_cast<int>(grid);
        const int c0 = joint % static_cast<int>(grid);
        if (target.sigma <= 0.0) {
            out(k, static_cast<std::size_t>(joint)) = 1.0;  // delta target
            continue;
        }
        for (int dr = -half; dr <= half; ++dr) {
            const int row = r0 + dr;
            if (row < 0 || row >= static_cast<int>(grid)) continue;
            for (int dc = -half; dc <= half; ++dc) {
                const int col = c0 + dc;
                if (col < 0 || col >= static_cast<int>(grid)) continue;
                const double d2 = static_cast<double>(dr * dr + dc * dc);
                out(k, static_cast<std::size_t>(row * static_cast<int>(grid) + col)) =
                    std::exp(-d2 / (2.0 * target.sigma * target.sigma));
            }
        }
    }
    return out;
}

ad::Value mse_heatmap(ad::Tape& tape, ad::Value scores, const Tensor& targets) {
    require_same_shape(scores.tensor(), targets, "mse_heatmap");
    ad::Value t = tape.constant(targets);
    return ad::mean(ad::square(ad::sub(scores, t)));
}

}  // namespace uniloss::tasks
