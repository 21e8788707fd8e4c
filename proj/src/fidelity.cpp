// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0

#include "uniloss/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "uniloss/interpolate.hpp"
#include "uniloss/metric_log.hpp"

namespace uniloss::fidelity {

namespace {

// fractional ranks: ties share the average of their positions
std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < v.size()) {
        std::size_t j = i;
        while (j + 1 < v.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size() && !a.empty(), "spearman: length mismatch or empty input");
    const std::vector<double> ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = ra[i] - ma, db = rb[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va <= 0.0 || vb <= 0.0) return 0.0;  // constant input: correlation undefined
    return cov / std::sqrt(va * vb);
}

FidelityReport run_fidelity(const train::Mlp& model, const data::Dataset& ds,
                            const train::RunConfig& cfg, std::vector<double> fractions,
                            std::size_t samples_per_fraction, std::uint64_t seed) {
    require(!fractions.empty(), "fidelity needs at least one fraction");
    require(samples_per_fraction >= 2, "fidelity needs at least 2 samples per fraction");
    for (double f : fractions) require(f >= 0.0 && f <= 1.0, "fractions must lie in [0,1]");
    std::sort(fractions.begin(), fractions.end());

    train::RunConfig fcfg = cfg;
    if (fcfg.task == train::TaskKind::pose) fcfg.anchors.pose_pixel_mode = true;

    FidelityReport report;
    Rng rng(seed);
    constexpr std::size_t perturbations_per_batch = 4;

    for (double fraction : fractions) {
        std::vector<double> approx, exact;
        approx.reserve(samples_per_fraction);
        exact.reserve(samples_per_fraction);
        while (approx.size() < samples_per_fraction) {
            for (const auto& batch : train::make_batches(ds, fcfg, rng)) {
                if (approx.size() >= samples_per_fraction) break;
                std::vector<int> labels(batch.size());
                for (std::size_t i = 0; i < batch.size(); ++i)
                    labels[i] = ds.labels[batch[i]];
                const Tensor outputs =
                    model.forward_plain(train::gather_rows(ds.inputs, batch));
                const ScoreBatch sb(outputs);
                const BatchTask task = train::make_batch_task(fcfg, labels, sb);
                const BinaryConfiguration current =
                    harden(compute_comparisons(sb, task.spec));
                const AnchorSet anchors =
                    build_anchor_set(task, current, fcfg.anchors, rng);
                const std::size_t l = current.size();
                const auto flips = static_cast<std::uint32_t>(
                    std::ceil(fraction * static_cast<double>(l)));
                for (std::size_t rep = 0;
                     rep < perturbations_per_batch && approx.size() < samples_per_fraction;
                     ++rep) {
                    BinaryConfiguration probe = current;
                    if (flips > 0)
                        for (auto idx : rng.sample_without_replacement(
                                 static_cast<std::uint32_t>(l), flips))
                            probe[idx] ^= 1;
                    std::vector<double> u(l);
                    for (std::size_t i = 0; i < l; ++i) u[i] = probe[i];
                    approx.push_back(idw_value(u, anchors));
                    exact.push_back(task.oracle(probe));
                }
            }
        }
        FidelityRow row;
        row.fraction = fraction;
        row.samples = approx.size();
        double l2 = 0.0;
        for (std::size_t i = 0; i < approx.size(); ++i) l2 += std::abs(approx[i] - exact[i]);
        row.mean_l2 = l2 / static_cast<double>(approx.size());
        row.rank_correlation = spearman(approx, exact);
        report.rows.push_back(row);
    }
    return report;
}

void write_csv(const std::string& path, const FidelityReport& report) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), "cannot open fidelity report for write: " + path);
    out << "fraction,mean_l2,rank_correlation,samples\n";
    for (const auto& r : report.rows)
        out << format_double(r.fraction) << ',' << format_double(r.mean_l2) << ','
            << format_double(r.rank_correlation) << ',' << r.samples << "\n";
    require(out.good(), "short write to fidelity report: " + path);
}

}  // namespace uniloss::fidelity
