// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0
//
// uniloss CLI: train/eval on the three tasks, experiment presets, the
// interpolation fidelity study, dataset generation and IDX verification.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "uniloss/config.hpp"
#include "uniloss/fidelity.hpp"
#include "uniloss/kernels.hpp"
#include "uniloss/metric_log.hpp"
#include "uniloss/presets.hpp"
#include "uniloss/train.hpp"

namespace {

using namespace uniloss;

struct CommonArgs {
    std::string task = "multiclass";
    std::string data_dir = "data";
    std::size_t classes = 10;
    std::size_t grid = 16;
    double radius = 2.0;
    std::size_t pose_count = 2400;
    double pose_noise = 0.25;
    std::size_t pose_decoys = 2;
    double pose_blob_sigma = 1.2;
    std::uint64_t pose_seed = 42;
    std::size_t val_reserve = 0;  // 0 = min(6000, N/5)
};

struct TrainArgs {
    CommonArgs common;
    std::string loss = "ce";
    std::size_t batch_size = 128;
    int epochs = -1;  // -1 = task default
    std::uint64_t seed = 1;
    int anchors_per_type = 16;
    int good_flips = 1;
    int nearby_flips = 1;
    double binary_fraction = 1.0;
    double sigma = 1.0;
    int bump_size = 7;
    double lr = 0.0;  // 0 = task default
    std::string optimizer;
    double temperature = 1.0;
    std::string hidden;  // "500x300"; empty = task default
    std::string out_csv;
    std::string config_path;
    std::string model_out;
    std::string run_id = "cli";
    std::size_t train_limit = 0;
    int lr_decay_start = 0;
    int lr_decay_every = 10;
    int lr_decay_until = 0;
    double lr_decay_factor = 1.0;
};

std::vector<std::size_t> parse_hidden(const std::string& s) {
    std::vector<std::size_t> out;
    std::string cur;
    for (char c : s + "x") {
        if (c == 'x' || c == ',') {
            if (!cur.empty()) out.push_back(std::stoul(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

void add_common_options(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--task", a.task, "multiclass|binary-ap|pose");
    cmd->add_option("--data-dir", a.data_dir, "directory with IDX files");
    cmd->add_option("--classes", a.classes, "class count (multiclass)");
    cmd->add_option("--grid", a.grid, "pose grid side length");
    cmd->add_option("--radius", a.radius, "pose PCKh radius in pixels");
    cmd->add_option("--pose-count", a.pose_count, "generated pose training images");
    cmd->add_option("--pose-noise", a.pose_noise, "pose image noise stddev");
    cmd->add_option("--pose-decoys", a.pose_decoys, "decoy blobs per pose image");
    cmd->add_option("--pose-blob-sigma", a.pose_blob_sigma, "pose blob stddev");
    cmd->add_option("--pose-seed", a.pose_seed, "pose dataset seed");
    cmd->add_option("--val-reserve", a.val_reserve,
                    "validation examples reserved from the training set (0 = auto)");
}

struct Splits {
    data::Dataset train;
    data::Dataset val;
};

Splits load_task_splits(const CommonArgs& a, std::size_t train_limit) {
    train::TaskKind task = train::task_from_string(a.task);
    if (task == train::TaskKind::pose) {
        data::PoseGenConfig gen;
        gen.count = a.pose_count;
        gen.grid = a.grid;
        gen.noise = a.pose_noise;
        gen.decoys = a.pose_decoys;
        gen.blob_sigma = a.pose_blob_sigma;
        gen.seed = a.pose_seed;
        data::PoseGenConfig val_gen = gen;
        val_gen.count = std::max<std::size_t>(64, gen.count / 4);
        val_gen.seed = gen.seed + 1;
        Splits s{data::gen_toy_pose(gen), data::gen_toy_pose(val_gen)};
        if (train_limit > 0) s.train = data::take_prefix(s.train, train_limit);
        return s;
    }
    data::Dataset full = presets::load_digit_split(a.data_dir, "train");
    if (task == train::TaskKind::binary_ap) {
        auto flags = data::make_binary_labels(full.labels);
        for (std::size_t i = 0; i < flags.size(); ++i) full.labels[i] = flags[i];
    }
    const std::size_t reserve = a.val_reserve > 0
                                    ? a.val_reserve
                                    : std::min<std::size_t>(6000, std::max<std::size_t>(
                                                                      1, full.size() / 5));
    auto [train_set, val_set] = data::split_off_validation(full, reserve);
    if (train_limit > 0) train_set = data::take_prefix(train_set, train_limit);
    return {std::move(train_set), std::move(val_set)};
}

train::RunConfig build_run_config(const TrainArgs& a) {
    train::RunConfig cfg;
    cfg.run_id = a.run_id;
    cfg.task = train::task_from_string(a.common.task);
    cfg.loss = train::loss_from_string(a.loss);
    cfg.batch_size = a.batch_size;
    cfg.seed = a.seed;
    cfg.anchors.count_per_type = a.anchors_per_type;
    cfg.anchors.good_flips = a.good_flips;
    cfg.anchors.nearby_flips = a.nearby_flips;
    cfg.binary_fraction = a.binary_fraction;
    cfg.temperature = a.temperature;
    cfg.heatmap_target.sigma = a.sigma;
    cfg.heatmap_target.bump_size = a.bump_size;
    cfg.classes = a.common.classes;
    cfg.grid = a.common.grid;
    cfg.radius = a.common.radius;
    cfg.lr.decay_start = a.lr_decay_start;
    cfg.lr.decay_every = a.lr_decay_every;
    cfg.lr.decay_until = a.lr_decay_until;
    cfg.lr.decay_factor = a.lr_decay_factor;

    switch (cfg.task) {
        case train::TaskKind::multiclass:
            cfg.epochs = a.epochs >= 0 ? a.epochs : 12;
            cfg.lr.initial = a.lr > 0 ? a.lr : 0.1;
            cfg.optimizer = train::optimizer_from_string(
                a.optimizer.empty() ? "sgd" : a.optimizer);
            cfg.hidden = a.hidden.empty() ? std::vector<std::size_t>{128, 64}
                                          : parse_hidden(a.hidden);
            break;
        case train::TaskKind::binary_ap:
            cfg.epochs = a.epochs >= 0 ? a.epochs : 30;
            cfg.lr.initial = a.lr > 0 ? a.lr : 0.01;
            cfg.optimizer = train::optimizer_from_string(
                a.optimizer.empty() ? "sgd" : a.optimizer);
            cfg.hidden = a.hidden.empty() ? std::vector<std::size_t>{500, 300}
                                          : parse_hidden(a.hidden);
            break;
        case train::TaskKind::pose:
            cfg.epochs = a.epochs >= 0 ? a.epochs : 40;
            cfg.lr.initial = a.lr > 0 ? a.lr : 2.5e-4;
            cfg.optimizer = train::optimizer_from_string(
                a.optimizer.empty() ? "rmsprop" : a.optimizer);
            cfg.hidden = a.hidden.empty() ? std::vector<std::size_t>{256, 256}
                                          : parse_hidden(a.hidden);
            break;
    }
    return cfg;
}

// File values fill in every option the user did not pass on the command line.
void apply_config_file(const CLI::App& cmd, TrainArgs& a) {
    if (a.config_path.empty()) return;
    const ConfigMap m = parse_config_file(a.config_path);
    auto absent = [&](const std::string& flag) { return cmd.count(flag) == 0; };
    if (absent("--task")) a.common.task = config_string(m, "task", a.common.task);
    if (absent("--loss")) a.loss = config_string(m, "loss", a.loss);
    if (absent("--batch-size"))
        a.batch_size = static_cast<std::size_t>(config_long(m, "batch_size",
                                                            static_cast<long>(a.batch_size)));
    if (absent("--epochs")) a.epochs = static_cast<int>(config_long(m, "epochs", a.epochs));
    if (absent("--seed"))
        a.seed = static_cast<std::uint64_t>(config_long(m, "seed",
                                                        static_cast<long>(a.seed)));
    if (absent("--anchors-per-type"))
        a.anchors_per_type = static_cast<int>(config_long(m, "anchors_per_type",
                                                          a.anchors_per_type));
    if (absent("--good-flips"))
        a.good_flips = static_cast<int>(config_long(m, "good_flips", a.good_flips));
    if (absent("--nearby-flips"))
        a.nearby_flips = static_cast<int>(config_long(m, "nearby_flips", a.nearby_flips));
    if (absent("--binary-fraction"))
        a.binary_fraction = config_double(m, "binary_fraction", a.binary_fraction);
    if (absent("--sigma")) a.sigma = config_double(m, "sigma", a.sigma);
    if (absent("--bump-size"))
        a.bump_size = static_cast<int>(config_long(m, "bump_size", a.bump_size));
    if (absent("--lr")) a.lr = config_double(m, "lr", a.lr);
    if (absent("--optimizer")) a.optimizer = config_string(m, "optimizer", a.optimizer);
    if (absent("--temperature")) a.temperature = config_double(m, "temperature", a.temperature);
    if (absent("--hidden")) a.hidden = config_string(m, "hidden", a.hidden);
    if (absent("--data-dir")) a.common.data_dir = config_string(m, "data_dir", a.common.data_dir);
    if (absent("--classes"))
        a.common.classes = static_cast<std::size_t>(
            config_long(m, "classes", static_cast<long>(a.common.classes)));
    if (absent("--grid"))
        a.common.grid = static_cast<std::size_t>(config_long(m, "grid",
                                                             static_cast<long>(a.common.grid)));
    if (absent("--radius")) a.common.radius = config_double(m, "radius", a.common.radius);
}

int cmd_train(TrainArgs& a, const CLI::App& cmd) {
    apply_config_file(cmd, a);
    const train::RunConfig cfg = build_run_config(a);
    Splits s = load_task_splits(a.common, a.train_limit);
    std::printf("training %s/%s on %zu examples (%zu validation), %d epochs, kernels=%s\n",
                to_string(cfg.task), to_string(cfg.loss), s.train.size(), s.val.size(),
                cfg.epochs, kernels::backend_name());
    const train::TrainResult res = train::train(cfg, s.train, s.val);
    if (!a.out_csv.empty()) {
        auto header = cfg.as_config_map();
        header["data_dir"] = a.common.data_dir;
        MetricLogWriter log(a.out_csv, header);
        for (const auto& rec : res.history) {
            log.append({cfg.run_id, rec.epoch, "train", to_string(cfg.loss), rec.train_loss,
                        rec.train_metric, rec.wallclock_s});
            log.append({cfg.run_id, rec.epoch, "val", to_string(cfg.loss),
                        std::numeric_limits<double>::quiet_NaN(), rec.val_metric,
                        rec.wallclock_s});
        }
    }
    if (res.diverged) {
        std::printf("training diverged at epoch %d\n", res.diverged_epoch);
        return 2;
    }
    for (const auto& rec : res.history)
        std::printf("epoch %3d  loss %.6f  train %.4f  val %.4f  (%.1fs)\n", rec.epoch,
                    rec.train_loss, rec.train_metric, rec.val_metric, rec.wallclock_s);
    if (!a.model_out.empty()) {
        res.model.save(a.model_out);
        std::printf("model saved to %s\n", a.model_out.c_str());
    }
    return 0;
}

int cmd_eval(const CommonArgs& a, const std::string& model_path, const std::string& split) {
    train::Mlp model = train::Mlp::load(model_path);
    train::RunConfig cfg;
    cfg.task = train::task_from_string(a.task);
    cfg.classes = a.classes;
    cfg.grid = a.grid;
    cfg.radius = a.radius;
    data::Dataset ds;
    if (split == "test") {
        require(cfg.task != train::TaskKind::pose, "pose has no file-backed test split; "
                                                   "use --split val");
        ds = presets::load_digit_split(a.data_dir, "t10k");
        if (cfg.task == train::TaskKind::binary_ap) {
            auto flags = data::make_binary_labels(ds.labels);
            for (std::size_t i = 0; i < flags.size(); ++i) ds.labels[i] = flags[i];
        }
    } else {
        Splits s = load_task_splits(a, 0);
        ds = split == "train" ? std::move(s.train) : std::move(s.val);
    }
    const double metric = train::evaluate(model, ds, cfg);
    std::printf("%s %s metric on %s split (%zu examples): %.6f\n", to_string(cfg.task),
                split.c_str(), a.data_dir.c_str(), ds.size(), metric);
    return 0;
}

int cmd_fetch_mnist_check(const std::string& data_dir) {
    const struct {
        const char* file;
        std::uint32_t magic;
        unsigned dims;
    } expected[] = {
        {"train-images-idx3-ubyte", 0x00000803u, 3},
        {"train-labels-idx1-ubyte", 0x00000801u, 1},
        {"t10k-images-idx3-ubyte", 0x00000803u, 3},
        {"t10k-labels-idx1-ubyte", 0x00000801u, 1},
    };
    bool ok = true;
    for (const auto& e : expected) {
        const std::string path = data_dir + "/" + e.file;
        try {
            const data::IdxInfo info = data::read_idx_info(path);
            require(info.magic == e.magic, "wrong magic");
            require(info.dims.size() == e.dims, "wrong dimension count");
            std::string dims;
            for (auto d : info.dims) dims += (dims.empty() ? "" : "x") + std::to_string(d);
            std::printf("%-26s magic 0x%08x dims %s OK\n", e.file, info.magic, dims.c_str());
        } catch (const std::exception& ex) {
            std::printf("%-26s FAILED: %s\n", e.file, ex.what());
            ok = false;
        }
    }
    if (ok) {
        const auto labels = data::load_idx_labels(data_dir + "/train-labels-idx1-ubyte");
        std::size_t zeros = 0;
        for (int v : labels) zeros += v == 0;
        std::printf("train zero-digit fraction: %.4f (%zu of %zu)\n",
                    static_cast<double>(zeros) / static_cast<double>(labels.size()), zeros,
                    labels.size());
        return 0;
    }
    std::printf("hint: run `uniloss gen-digits --out-dir %s` to synthesize a compatible "
                "dataset\n",
                data_dir.c_str());
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"uniloss: surrogate-loss training via evaluation refactoring and "
                 "anchor interpolation"};
    app.require_subcommand(1);

    // train
    TrainArgs targs;
    CLI::App* train_cmd = app.add_subcommand("train", "train one model");
    add_common_options(train_cmd, targs.common);
    train_cmd->add_option("--loss", targs.loss, "uniloss|ce|mse");
    train_cmd->add_option("--batch-size", targs.batch_size);
    train_cmd->add_option("--epochs", targs.epochs, "-1 = task default");
    train_cmd->add_option("--seed", targs.seed);
    train_cmd->add_option("--anchors-per-type", targs.anchors_per_type);
    train_cmd->add_option("--good-flips", targs.good_flips);
    train_cmd->add_option("--nearby-flips", targs.nearby_flips);
    train_cmd->add_option("--binary-fraction", targs.binary_fraction);
    train_cmd->add_option("--sigma", targs.sigma, "MSE target bump stddev (0 = delta)");
    train_cmd->add_option("--bump-size", targs.bump_size);
    train_cmd->add_option("--lr", targs.lr, "0 = task default");
    train_cmd->add_option("--optimizer", targs.optimizer, "sgd|rmsprop");
    train_cmd->add_option("--temperature", targs.temperature);
    train_cmd->add_option("--hidden", targs.hidden, "hidden sizes, e.g. 500x300");
    train_cmd->add_option("--out", targs.out_csv, "metric log CSV path");
    train_cmd->add_option("--config", targs.config_path, "flat key = value config file");
    train_cmd->add_option("--model-out", targs.model_out, "save final model here");
    train_cmd->add_option("--run-id", targs.run_id);
    train_cmd->add_option("--train-limit", targs.train_limit, "cap training examples");
    train_cmd->add_option("--lr-decay-start", targs.lr_decay_start);
    train_cmd->add_option("--lr-decay-every", targs.lr_decay_every);
    train_cmd->add_option("--lr-decay-until", targs.lr_decay_until);
    train_cmd->add_option("--lr-decay-factor", targs.lr_decay_factor);

    // eval
    CommonArgs eargs;
    std::string eval_model, eval_split = "val";
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a saved model");
    add_common_options(eval_cmd, eargs);
    eval_cmd->add_option("--model", eval_model)->required();
    eval_cmd->add_option("--split", eval_split, "train|val|test");

    // preset
    std::string preset_name;
    presets::PresetOptions popt;
    std::vector<std::size_t> preset_sizes;
    std::vector<int> preset_anchor_counts;
    CLI::App* preset_cmd = app.add_subcommand("preset", "run a canned experiment set");
    preset_cmd->add_option("name", preset_name, "ap-mnist|anchors-ablation|batch-ablation|"
                                                "multiclass-mnist|pose-sigma|fidelity")
        ->required();
    preset_cmd->add_option("--data-dir", popt.data_dir);
    preset_cmd->add_option("--out", popt.out_csv, "metric log / report CSV path");
    preset_cmd->add_option("--jobs", popt.jobs, "concurrent runs");
    preset_cmd->add_option("--seeds", popt.seeds, "seeds per configuration");
    preset_cmd->add_option("--base-seed", popt.base_seed);
    preset_cmd->add_option("--sizes", preset_sizes, "batch sizes override")->delimiter(',');
    preset_cmd->add_option("--anchor-counts", preset_anchor_counts, "anchor counts override")
        ->delimiter(',');
    preset_cmd->add_option("--epochs-override", popt.epochs_override);
    preset_cmd->add_option("--train-limit", popt.train_limit);
    preset_cmd->add_option("--fidelity-samples", popt.fidelity_samples);

    // fidelity
    CommonArgs fargs;
    std::string fid_model, fid_out;
    std::vector<double> fid_fractions;
    std::size_t fid_samples = 256;
    std::uint64_t fid_seed = 1;
    std::size_t fid_batch = 128;
    int fid_anchors = 16;
    CLI::App* fid_cmd = app.add_subcommand("fidelity", "interpolation fidelity study");
    add_common_options(fid_cmd, fargs);
    fid_cmd->add_option("--model", fid_model)->required();
    fid_cmd->add_option("--fractions", fid_fractions, "Hamming fractions")->delimiter(',');
    fid_cmd->add_option("--samples", fid_samples, "configurations per fraction");
    fid_cmd->add_option("--seed", fid_seed);
    fid_cmd->add_option("--batch-size", fid_batch);
    fid_cmd->add_option("--anchors-per-type", fid_anchors);
    fid_cmd->add_option("--out", fid_out, "report CSV path");

    // gen-pose
    data::PoseGenConfig pose_gen;
    std::string pose_dir = "data", pose_prefix = "pose-train";
    CLI::App* pose_cmd = app.add_subcommand("gen-pose", "write a toy pose IDX dataset");
    pose_cmd->add_option("--count", pose_gen.count);
    pose_cmd->add_option("--grid", pose_gen.grid);
    pose_cmd->add_option("--blob-sigma", pose_gen.blob_sigma);
    pose_cmd->add_option("--noise", pose_gen.noise);
    pose_cmd->add_option("--seed", pose_gen.seed);
    pose_cmd->add_option("--out-dir", pose_dir);
    pose_cmd->add_option("--prefix", pose_prefix);

    // gen-digits
    std::string digits_dir = "data";
    std::size_t digits_train = 10000, digits_test = 2000;
    std::uint64_t digits_seed = 7;
    CLI::App* digits_cmd =
        app.add_subcommand("gen-digits", "write a synthetic MNIST-format digit dataset");
    digits_cmd->add_option("--out-dir", digits_dir);
    digits_cmd->add_option("--train-count", digits_train);
    digits_cmd->add_option("--test-count", digits_test);
    digits_cmd->add_option("--seed", digits_seed);

    // fetch-mnist-check
    std::string check_dir = "data";
    CLI::App* check_cmd =
        app.add_subcommand("fetch-mnist-check", "verify local IDX files by magic and dims");
    check_cmd->add_option("--data-dir", check_dir);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(targs, *train_cmd);
        if (eval_cmd->parsed()) return cmd_eval(eargs, eval_model, eval_split);
        if (preset_cmd->parsed()) {
            popt.batch_sizes = preset_sizes;
            popt.anchor_counts = preset_anchor_counts;
            const presets::PresetOutcome outcome = presets::run_preset(preset_name, popt);
            for (const auto& r : outcome.runs) {
                if (r.diverged)
                    std::printf("%-28s diverged at epoch %d\n", r.cfg.run_id.c_str(),
                                r.diverged_epoch);
                else
                    std::printf("%-28s val %.4f train %.4f%s\n", r.cfg.run_id.c_str(),
                                r.final_val_metric, r.final_train_metric,
                                r.final_test_metric > 0.0
                                    ? (" test " + std::to_string(r.final_test_metric)).c_str()
                                    : "");
            }
            std::fputs(outcome.summary_text.c_str(), stdout);
            return 0;
        }
        if (fid_cmd->parsed()) {
            train::Mlp model = train::Mlp::load(fid_model);
            train::RunConfig cfg;
            cfg.task = train::task_from_string(fargs.task);
            cfg.loss = train::LossKind::uniloss;
            cfg.classes = fargs.classes;
            cfg.grid = fargs.grid;
            cfg.radius = fargs.radius;
            cfg.batch_size = fid_batch;
            cfg.anchors.count_per_type = fid_anchors;
            Splits s = load_task_splits(fargs, 0);
            if (fid_fractions.empty()) fid_fractions = fidelity::default_fractions;
            const fidelity::FidelityReport report =
                fidelity::run_fidelity(model, s.train, cfg, fid_fractions, fid_samples,
                                       fid_seed);
            std::printf("fraction    mean_l2   rank_corr   samples\n");
            for (const auto& r : report.rows)
                std::printf("%-10.6f  %-8.4f  %-9.4f  %zu\n", r.fraction, r.mean_l2,
                            r.rank_correlation, r.samples);
            if (!fid_out.empty()) fidelity::write_csv(fid_out, report);
            return 0;
        }
        if (pose_cmd->parsed()) {
            std::filesystem::create_directories(pose_dir);
            data::write_pose_files(pose_dir, pose_prefix, pose_gen);
            std::printf("wrote %s/%s-{images-idx3,labels-idx1}-ubyte (%zu images, grid %zu)\n",
                        pose_dir.c_str(), pose_prefix.c_str(), pose_gen.count, pose_gen.grid);
            return 0;
        }
        if (digits_cmd->parsed()) {
            std::filesystem::create_directories(digits_dir);
            data::write_digit_files(digits_dir, digits_train, digits_test, digits_seed);
            std::printf("wrote train (%zu) and t10k (%zu) digit files to %s\n", digits_train,
                        digits_test, digits_dir.c_str());
            return 0;
        }
        if (check_cmd->parsed()) return cmd_fetch_mnist_check(check_dir);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
