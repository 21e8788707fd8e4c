// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0

#include "uniloss/presets.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "uniloss/metric_log.hpp"

namespace uniloss::presets {

namespace {

// ---------------------------------------------------------------------------
// dataset plumbing
// ---------------------------------------------------------------------------

std::size_t validation_reserve(std::size_t n) {
    // 6k per the MNIST recipe, scaled down for smaller corpora
    return std::min<std::size_t>(6000, std::max<std::size_t>(1, n / 5));
}

data::Dataset as_binary(data::Dataset ds) {
    auto flags = data::make_binary_labels(ds.labels);
    for (std::size_t i = 0; i < flags.size(); ++i) ds.labels[i] = flags[i];
    return ds;
}

struct SplitPair {
    data::Dataset train;
    data::Dataset val;
};

SplitPair digit_splits(const PresetOptions& opt, bool binary) {
    data::Dataset full = load_digit_split(opt.data_dir, "train");
    if (binary) full = as_binary(std::move(full));
    auto [train, val] = data::split_off_validation(full, validation_reserve(full.size()));
    if (opt.train_limit > 0) train = data::take_prefix(train, opt.train_limit);
    return {std::move(train), std::move(val)};
}

// ---------------------------------------------------------------------------
// run config factories
// ---------------------------------------------------------------------------

train::RunConfig ap_config(train::LossKind loss, std::uint64_t seed, int anchors_per_type,
                           const PresetOptions& opt) {
    train::RunConfig cfg;
    cfg.task = train::TaskKind::binary_ap;
    cfg.loss = loss;
    cfg.batch_size = 128;
    cfg.epochs = opt.epochs_override > 0 ? opt.epochs_override : 30;
    cfg.seed = seed;
    cfg.lr.initial = 0.01;
    cfg.optimizer = train::OptimizerKind::sgd;
    cfg.hidden = {500, 300};
    cfg.anchors.count_per_type = anchors_per_type;
    std::ostringstream id;
    id << "ap-" << to_string(loss) << "-a" << anchors_per_type << "-s" << seed;
    cfg.run_id = id.str();
    return cfg;
}

train::RunConfig multiclass_config(train::LossKind loss, std::uint64_t seed,
                                   std::size_t batch, const PresetOptions& opt) {
    train::RunConfig cfg;
    cfg.task = train::TaskKind::multiclass;
    cfg.loss = loss;
    cfg.classes = 10;
    cfg.batch_size = batch;
    cfg.epochs = opt.epochs_override > 0 ? opt.epochs_override : 20;
    cfg.seed = seed;
    // the IDW surrogate produces structurally smaller gradients than CE, so
    // each loss gets its own tuned rate
    cfg.lr.initial = loss == train::LossKind::uniloss ? 1.5 : 0.3;
    cfg.optimizer = train::OptimizerKind::sgd;
    cfg.hidden = {128, 64};
    std::ostringstream id;
    id << "multiclass-" << to_string(loss) << "-b" << batch << "-s" << seed;
    cfg.run_id = id.str();
    return cfg;
}

train::RunConfig pose_config(train::LossKind loss, std::uint64_t seed, double sigma,
                             const PresetOptions& opt) {
    train::RunConfig cfg;
    cfg.task = train::TaskKind::pose;
    cfg.loss = loss;
    cfg.grid = 16;
    cfg.radius = 2.0;
    cfg.batch_size = loss == train::LossKind::uniloss ? 8 : 16;
    cfg.epochs = opt.epochs_override > 0 ? opt.epochs_override
                                         : (loss == train::LossKind::uniloss ? 36 : 40);
    cfg.seed = seed;
    if (loss == train::LossKind::uniloss) cfg.anchors.count_per_type = 24;
    cfg.lr.initial = 2.5e-4;
    cfg.optimizer = train::OptimizerKind::rmsprop;
    cfg.hidden = {256, 256};
    cfg.heatmap_target.sigma = sigma;
    cfg.heatmap_target.bump_size = 7;
    std::ostringstream id;
    if (loss == train::LossKind::mse)
        id << "pose-mse-sigma" << sigma << "-s" << seed;
    else
        id << "pose-" << to_string(loss) << "-s" << seed;
    cfg.run_id = id.str();
    return cfg;
}

SplitPair pose_splits(const PresetOptions& opt) {
    data::PoseGenConfig gen;
    gen.grid = 16;
    gen.noise = 0.18;
    gen.count = opt.train_limit > 0 ? opt.train_limit : 5500;
    gen.seed = opt.base_seed * 7919 + 17;
    data::PoseGenConfig val_gen = gen;
    val_gen.count = std::max<std::size_t>(64, gen.count / 4);
    val_gen.seed = gen.seed + 1;
    return {data::gen_toy_pose(gen), data::gen_toy_pose(val_gen)};
}

}  // namespace

data::Dataset load_digit_split(const std::string& data_dir, const std::string& prefix) {
    try {
        return data::load_image_split(data_dir, prefix);
    } catch (const Error& e) {
        throw Error(std::string(e.what()) + "\ndigit dataset missing or invalid in `" +
                    data_dir + "`: run `uniloss gen-digits --out-dir " + data_dir +
                    "` or place MNIST IDX files there");
    }
}

// ---------------------------------------------------------------------------
// parallel run driver
// ---------------------------------------------------------------------------

namespace {

std::vector<RunSummary> run_configs_impl(const std::vector<train::RunConfig>& configs,
                                         const data::Dataset& train_set,
                                         const data::Dataset& val_set,
                                         const data::Dataset* test_set, int jobs,
                                         const std::string& out_csv) {
    std::vector<RunSummary> summaries(configs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= configs.size()) return;
            try {
                const train::RunConfig& cfg = configs[i];
                train::TrainResult res = train::train(cfg, train_set, val_set);
                RunSummary s;
                s.cfg = cfg;
                s.diverged = res.diverged;
                s.diverged_epoch = res.diverged_epoch;
                s.history = res.history;
                s.final_val_metric = res.final_val_metric();
                s.final_train_metric =
                    res.history.empty() ? 0.0 : res.history.back().train_metric;
                if (test_set != nullptr && !res.diverged)
                    s.final_test_metric = train::evaluate(res.model, *test_set, cfg);
                summaries[i] = std::move(s);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int thread_count = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
    std::vector<std::thread> threads;
    threads.reserve(thread_count);
    for (int t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);

    if (!out_csv.empty() && !configs.empty()) {
        auto header = configs.front().as_config_map();
        header["runs"] = std::to_string(configs.size());
        MetricLogWriter log(out_csv, header);
        for (const auto& s : summaries) {
            for (const auto& rec : s.history) {
                log.append({s.cfg.run_id, rec.epoch, "train", to_string(s.cfg.loss),
                            rec.train_loss, rec.train_metric, rec.wallclock_s});
                log.append({s.cfg.run_id, rec.epoch, "val", to_string(s.cfg.loss),
                            std::numeric_limits<double>::quiet_NaN(), rec.val_metric,
                            rec.wallclock_s});
            }
        }
    }
    return summaries;
}

double mean_over(const std::vector<RunSummary>& runs,
                 const std::function<bool(const RunSummary&)>& pick,
                 const std::function<double(const RunSummary&)>& get) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : runs)
        if (pick(r)) {
            sum += get(r);
            ++count;
        }
    require(count > 0, "no runs matched summary selector");
    return sum / static_cast<double>(count);
}

}  // namespace

std::vector<RunSummary> run_configs(const std::vector<train::RunConfig>& configs,
                                    const data::Dataset& train_set,
                                    const data::Dataset& val_set, int jobs,
                                    const std::string& out_csv) {
    return run_configs_impl(configs, train_set, val_set, nullptr, jobs, out_csv);
}

// ---------------------------------------------------------------------------
// presets
// ---------------------------------------------------------------------------

std::vector<std::string> preset_names() {
    return {"ap-mnist",         "anchors-ablation", "batch-ablation",
            "multiclass-mnist", "pose-sigma",       "fidelity"};
}

PresetOutcome run_preset(const std::string& name, const PresetOptions& opt) {
    PresetOutcome outcome;
    outcome.name = name;
    std::ostringstream summary;

    if (name == "ap-mnist") {
        SplitPair split = digit_splits(opt, /*binary=*/true);
        std::vector<train::RunConfig> configs;
        for (int s = 0; s < opt.seeds; ++s) {
            configs.push_back(ap_config(train::LossKind::ce, opt.base_seed + s, 16, opt));
            configs.push_back(ap_config(train::LossKind::uniloss, opt.base_seed + s, 16, opt));
        }
        outcome.runs = run_configs(configs, split.train, split.val, opt.jobs, opt.out_csv);
        const double ce = mean_over(
            outcome.runs, [](const RunSummary& r) { return r.cfg.loss == train::LossKind::ce; },
            [](const RunSummary& r) { return r.final_val_metric; });
        const double uni = mean_over(
            outcome.runs,
            [](const RunSummary& r) { return r.cfg.loss == train::LossKind::uniloss; },
            [](const RunSummary& r) { return r.final_val_metric; });
        summary << "ap-mnist: mean val AP over " << opt.seeds << " seed(s): ce=" << ce
                << " uniloss=" << uni << " gap=" << std::abs(ce - uni) << "\n";
    } else if (name == "anchors-ablation") {
        SplitPair split = digit_splits(opt, /*binary=*/true);
        std::vector<int> counts = opt.anchor_counts.empty() ? std::vector<int>{5, 10, 16}
                                                            : opt.anchor_counts;
        std::vector<train::RunConfig> configs;
        for (int c : counts)
            configs.push_back(ap_config(train::LossKind::uniloss, opt.base_seed, c, opt));
        outcome.runs = run_configs(configs, split.train, split.val, opt.jobs, opt.out_csv);
        summary << "anchors-ablation: val AP per anchors-per-type:";
        for (const auto& r : outcome.runs)
            summary << " " << r.cfg.anchors.count_per_type << "->" << r.final_val_metric;
        summary << "\n";
    } else if (name == "batch-ablation") {
        SplitPair split = digit_splits(opt, /*binary=*/false);
        std::vector<std::size_t> sizes = opt.batch_sizes.empty()
                                             ? std::vector<std::size_t>{8,   16,  32,  64,
                                                                        128, 256, 512, 1024}
                                             : opt.batch_sizes;
        std::vector<train::RunConfig> configs;
        for (auto b : sizes)
            for (int s = 0; s < opt.seeds; ++s)
                configs.push_back(
                    multiclass_config(train::LossKind::uniloss, opt.base_seed + s, b, opt));
        outcome.runs = run_configs(configs, split.train, split.val, opt.jobs, opt.out_csv);
        summary << "batch-ablation: mean val accuracy per batch size:";
        for (auto b : sizes) {
            const double acc = mean_over(
                outcome.runs,
                [b](const RunSummary& r) { return r.cfg.batch_size == b; },
                [](const RunSummary& r) { return r.final_val_metric; });
            summary << " " << b << "->" << acc;
        }
        summary << "\n";
    } else if (name == "multiclass-mnist") {
        SplitPair split = digit_splits(opt, /*binary=*/false);
        data::Dataset test = load_digit_split(opt.data_dir, "t10k");
        std::vector<train::RunConfig> configs;
        for (int s = 0; s < opt.seeds; ++s) {
            configs.push_back(
                multiclass_config(train::LossKind::ce, opt.base_seed + s, 128, opt));
            configs.push_back(
                multiclass_config(train::LossKind::uniloss, opt.base_seed + s, 128, opt));
        }
        outcome.runs =
            run_configs_impl(configs, split.train, split.val, &test, opt.jobs, opt.out_csv);
        const double ce = mean_over(
            outcome.runs, [](const RunSummary& r) { return r.cfg.loss == train::LossKind::ce; },
            [](const RunSummary& r) { return r.final_test_metric; });
        const double uni = mean_over(
            outcome.runs,
            [](const RunSummary& r) { return r.cfg.loss == train::LossKind::uniloss; },
            [](const RunSummary& r) { return r.final_test_metric; });
        summary << "multiclass-mnist: mean test accuracy over " << opt.seeds
                << " seed(s): ce=" << ce << " uniloss=" << uni << " gap=" << std::abs(ce - uni)
                << "\n";
    } else if (name == "pose-sigma") {
        SplitPair split = pose_splits(opt);
        const std::vector<double> sigmas =
            opt.pose_sigmas.empty() ? std::vector<double>{0.0, 0.5, 1.0, 3.0} : opt.pose_sigmas;
        std::vector<train::RunConfig> configs;
        configs.push_back(pose_config(train::LossKind::uniloss, opt.base_seed, 0.0, opt));
        for (double sigma : sigmas)
            configs.push_back(pose_config(train::LossKind::mse, opt.base_seed, sigma, opt));
        outcome.runs = run_configs(configs, split.train, split.val, opt.jobs, opt.out_csv);
        summary << "pose-sigma: val PCKh:";
        for (const auto& r : outcome.runs) {
            summary << " " << r.cfg.run_id << "->";
            if (r.diverged)
                summary << "diverged@" << r.diverged_epoch;
            else
                summary << r.final_val_metric;
        }
        summary << "\n";
    } else if (name == "fidelity") {
        SplitPair split = digit_splits(opt, /*binary=*/false);
        train::RunConfig cfg = multiclass_config(train::LossKind::uniloss, opt.base_seed, 128, opt);
        cfg.epochs = opt.epochs_override > 0 ? opt.epochs_override : 3;
        cfg.run_id = "fidelity-model";
        train::TrainResult res = train::train(cfg, split.train, split.val);
        require(!res.diverged, "fidelity preset: model training diverged");
        RunSummary s;
        s.cfg = cfg;
        s.final_val_metric = res.final_val_metric();
        s.final_train_metric = res.history.empty() ? 0.0 : res.history.back().train_metric;
        s.history = res.history;
        outcome.runs.push_back(std::move(s));
        outcome.fidelity_report =
            fidelity::run_fidelity(res.model, split.train, cfg, fidelity::default_fractions,
                                   opt.fidelity_samples, opt.base_seed + 99);
        if (!opt.out_csv.empty()) fidelity::write_csv(opt.out_csv, *outcome.fidelity_report);
        summary << "fidelity: fraction -> rank correlation:";
        for (const auto& row : outcome.fidelity_report->rows)
            summary << " " << row.fraction << "->" << row.rank_correlation;
        summary << "\n";
    } else {
        std::string names;
        for (const auto& n : preset_names()) names += " " + n;
        throw Error("unknown preset `" + name + "`; available:" + names);
    }

    outcome.summary_text = summary.str();
    return outcome;
}

}  // namespace uniloss::presets
