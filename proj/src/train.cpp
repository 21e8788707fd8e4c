// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0

#include "uniloss/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <numeric>

#include <limits>

#include "uniloss/interpolate.hpp"
#include "uniloss/kernels.hpp"
#include "uniloss/metric_log.hpp"

namespace uniloss::train {

// ---------------------------------------------------------------------------
// Mlp
// ---------------------------------------------------------------------------

Mlp::Mlp(std::vector<std::size_t> sizes, Rng& rng) : sizes_(std::move(sizes)) {
    require(sizes_.size() >= 2, "MLP needs at least input and output sizes");
    for (auto s : sizes_) require(s >= 1, "MLP layer sizes must be positive");
    for (std::size_t layer = 0; layer + 1 < sizes_.size(); ++layer) {
        const std::size_t fan_in = sizes_[layer], fan_out = sizes_[layer + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Tensor w({fan_in, fan_out});
        for (auto& v : w.vec()) v = rng.uniform(-bound, bound);
        Tensor b({fan_out});
        for (auto& v : b.vec()) v = rng.uniform(-bound, bound);
        weights_.emplace_back(std::move(w));
        biases_.emplace_back(std::move(b));
    }
}

ad::Value Mlp::forward(ad::Tape& tape, ad::Value input) {
    ad::Value h = input;
    for (std::size_t layer = 0; layer < weights_.size(); ++layer) {
        h = ad::add_bias(ad::matmul(h, tape.leaf(weights_[layer])),
                         tape.leaf(biases_[layer]));
        if (layer + 1 < weights_.size()) h = ad::relu(h);
    }
    return h;
}

Tensor Mlp::forward_plain(const Tensor& input) const {
    require(input.ndim() == 2 && input.cols() == sizes_.front(),
            "MLP input " + input.shape_str() + " does not match input width " +
                std::to_string(sizes_.front()));
    Tensor h = input;
    for (std::size_t layer = 0; layer < weights_.size(); ++layer) {
        const Tensor& w = weights_[layer].value;
        const Tensor& b = biases_[layer].value;
        Tensor y({h.rows(), w.cols()});
        kernels::gemm_nn(h.rows(), w.cols(), w.rows(), h.data(), w.data(), y.data(), false);
        for (std::size_t i = 0; i < y.rows(); ++i)
            for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += b[j];
        if (layer + 1 < weights_.size()) kernels::relu(y.data(), y.data(), y.numel());
        h = std::move(y);
    }
    return h;
}

std::vector<ad::Parameter*> Mlp::parameters() {
    std::vector<ad::Parameter*> out;
    out.reserve(weights_.size() * 2);
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        out.push_back(&weights_[i]);
        out.push_back(&biases_[i]);
    }
    return out;
}

void Mlp::zero_grad() {
    for (auto& p : weights_) p.zero_grad();
    for (auto& p : biases_) p.zero_grad();
}

bool Mlp::all_finite() const {
    for (const auto& p : weights_)
        if (!p.value.all_finite()) return false;
    for (const auto& p : biases_)
        if (!p.value.all_finite()) return false;
    return true;
}

namespace {
constexpr char kModelMagic[8] = {'U', 'L', 'M', 'L', 'P', '0', '0', '1'};
}

void Mlp::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open model file for write: " + path);
    out.write(kModelMagic, sizeof kModelMagic);
    const std::uint32_t n = static_cast<std::uint32_t>(sizes_.size());
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    for (auto s : sizes_) {
        const std::uint64_t v = s;
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    auto dump = [&](const Tensor& t) {
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.numel() * sizeof(double)));
    };
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        dump(weights_[i].value);
        dump(biases_[i].value);
    }
    require(out.good(), "short write to model file: " + path);
}

Mlp Mlp::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open model file: " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    require(in.good() && std::memcmp(magic, kModelMagic, sizeof magic) == 0,
            "not a uniloss model file: " + path);
    std::uint32_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    require(in.good() && n >= 2 && n < 64, "corrupt model header in " + path);
    Mlp m;
    m.sizes_.resize(n);
    for (auto& s : m.sizes_) {
        std::uint64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof v);
        s = static_cast<std::size_t>(v);
    }
    for (std::size_t layer = 0; layer + 1 < m.sizes_.size(); ++layer) {
        Tensor w({m.sizes_[layer], m.sizes_[layer + 1]});
        in.read(reinterpret_cast<char*>(w.data()),
                static_cast<std::streamsize>(w.numel() * sizeof(double)));
        Tensor b({m.sizes_[layer + 1]});
        in.read(reinterpret_cast<char*>(b.data()),
                static_cast<std::streamsize>(b.numel() * sizeof(double)));
        require(in.good(), "model file truncated: " + path);
        m.weights_.emplace_back(std::move(w));
        m.biases_.emplace_back(std::move(b));
    }
    return m;
}

// ---------------------------------------------------------------------------
// enums, schedule, optimizer
// ---------------------------------------------------------------------------

const char* to_string(LossKind k) {
    switch (k) {
        case LossKind::uniloss: return "uniloss";
        case LossKind::ce: return "ce";
        case LossKind::mse: return "mse";
    }
    return "?";
}

const char* to_string(TaskKind k) {
    switch (k) {
        case TaskKind::multiclass: return "multiclass";
        case TaskKind::binary_ap: return "binary-ap";
        case TaskKind::pose: return "pose";
    }
    return "?";
}

LossKind loss_from_string(const std::string& s) {
    if (s == "uniloss") return LossKind::uniloss;
    if (s == "ce") return LossKind::ce;
    if (s == "mse") return LossKind::mse;
    throw Error("unknown loss `" + s + "` (expected uniloss|ce|mse)");
}

TaskKind task_from_string(const std::string& s) {
    if (s == "multiclass") return TaskKind::multiclass;
    if (s == "binary-ap") return TaskKind::binary_ap;
    if (s == "pose") return TaskKind::pose;
    throw Error("unknown task `" + s + "` (expected multiclass|binary-ap|pose)");
}

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "rmsprop") return OptimizerKind::rmsprop;
    throw Error("unknown optimizer `" + s + "` (expected sgd|rmsprop)");
}

double LrSchedule::at(int epoch) const {
    require(initial > 0.0, "learning rate must be positive");
    if (decay_start <= 0 || decay_factor == 1.0) return initial;
    require(decay_every >= 1, "lr decay interval must be at least 1 epoch");
    double lr = initial;
    for (int e = decay_start; e <= epoch; e += decay_every) {
        if (decay_until > 0 && e > decay_until) break;
        lr /= decay_factor;
    }
    return lr;
}

Optimizer::Optimizer(OptimizerKind kind, double rmsprop_decay, double rmsprop_eps)
    : kind_(kind), decay_(rmsprop_decay), eps_(rmsprop_eps) {}

void Optimizer::step(const std::vector<ad::Parameter*>& params, double lr) {
    if (kind_ == OptimizerKind::sgd) {
        for (auto* p : params)
            kernels::axpy(-lr, p->grad.data(), p->value.data(), p->value.numel());
        return;
    }
    if (accum_.empty())
        for (auto* p : params) accum_.push_back(Tensor::zeros(p->value.shape()));
    require(accum_.size() == params.size(), "optimizer state does not match parameter list");
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& acc = accum_[i];
        ad::Parameter& p = *params[i];
        for (std::size_t j = 0; j < p.value.numel(); ++j) {
            const double g = p.grad[j];
            acc[j] = decay_ * acc[j] + (1.0 - decay_) * g * g;
            p.value[j] -= lr * g / (std::sqrt(acc[j]) + eps_);
        }
    }
}

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

void RunConfig::validate() const {
    anchors.validate();
    require(epochs >= 0, "epoch count must be non-negative");
    require(batch_size >= 1, "batch size must be positive");
    if (task == TaskKind::binary_ap)
        require(batch_size >= 2, "AP task needs batch size >= 2 (one positive, one negative)");
    require(binary_fraction > 0.0 && binary_fraction <= 1.0,
            "binary fraction must be in (0,1]");
    require(temperature > 0.0, "temperature must be positive");
    require(lr.initial > 0.0, "learning rate must be positive");
    switch (loss) {
        case LossKind::uniloss: break;
        case LossKind::ce:
            require(task != TaskKind::pose, "cross-entropy baseline applies to "
                                            "multiclass and binary-ap tasks");
            break;
        case LossKind::mse:
            require(task == TaskKind::pose, "MSE heatmap baseline applies to the pose task");
            break;
    }
    if (task == TaskKind::multiclass) require(classes >= 2, "multiclass needs >= 2 classes");
    if (task == TaskKind::pose) {
        require(grid >= 2, "pose grid must be at least 2");
        require(radius >= 0.0 && radius < static_cast<double>(grid) / 2.0,
                "pose radius must lie in [0, grid/2)");
    }
}

std::size_t RunConfig::model_output_dim() const {
    switch (task) {
        case TaskKind::multiclass: return classes;
        case TaskKind::pose: return grid * grid;
        case TaskKind::binary_ap: return loss == LossKind::ce ? 2 : 1;
    }
    return 1;
}

std::map<std::string, std::string> RunConfig::as_config_map() const {
    std::map<std::string, std::string> m;
    m["run_id"] = run_id;
    m["task"] = to_string(task);
    m["loss"] = to_string(loss);
    m["batch_size"] = std::to_string(batch_size);
    m["epochs"] = std::to_string(epochs);
    m["seed"] = std::to_string(seed);
    m["anchors_per_type"] = std::to_string(anchors.count_per_type);
    m["good_flips"] = std::to_string(anchors.good_flips);
    m["nearby_flips"] = std::to_string(anchors.nearby_flips);
    m["pose_pixel_mode"] = anchors.pose_pixel_mode ? "1" : "0";
    m["binary_fraction"] = format_double(binary_fraction);
    m["temperature"] = format_double(temperature);
    m["lr"] = format_double(lr.initial);
    m["lr_decay_start"] = std::to_string(lr.decay_start);
    m["lr_decay_every"] = std::to_string(lr.decay_every);
    m["lr_decay_until"] = std::to_string(lr.decay_until);
    m["lr_decay_factor"] = format_double(lr.decay_factor);
    m["optimizer"] = optimizer == OptimizerKind::sgd ? "sgd" : "rmsprop";
    m["rmsprop_decay"] = format_double(rmsprop_decay);
    m["rmsprop_eps"] = format_double(rmsprop_eps);
    std::string h;
    for (auto s : hidden) h += (h.empty() ? "" : "x") + std::to_string(s);
    m["hidden"] = h;
    m["classes"] = std::to_string(classes);
    m["grid"] = std::to_string(grid);
    m["radius"] = format_double(radius);
    m["sigma"] = format_double(heatmap_target.sigma);
    m["bump_size"] = std::to_string(heatmap_target.bump_size);
    m["kernels"] = kernels::backend_name();
    return m;
}

// ---------------------------------------------------------------------------
// batching
// ---------------------------------------------------------------------------

Tensor gather_rows(const Tensor& inputs, const std::vector<std::uint32_t>& rows) {
    Tensor out({rows.size(), inputs.cols()});
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy_n(inputs.data() + static_cast<std::size_t>(rows[i]) * inputs.cols(),
                    inputs.cols(), out.data() + i * inputs.cols());
    return out;
}

std::vector<std::vector<std::uint32_t>> make_batches(const data::Dataset& ds,
                                                     const RunConfig& cfg, Rng& rng) {
    const std::size_t n = ds.size();
    require(n >= 1, "empty dataset");
    const std::size_t batch = std::min(cfg.batch_size, n);
    const std::size_t nb = (n + batch - 1) / batch;

    if (cfg.task != TaskKind::binary_ap || cfg.loss != LossKind::uniloss) {
        // plain shuffled chunks; CE on the AP task has no per-batch pos/neg
        // requirement either
        std::vector<std::uint32_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        std::vector<std::vector<std::uint32_t>> batches;
        for (std::size_t off = 0; off < n; off += batch)
            batches.emplace_back(perm.begin() + static_cast<long>(off),
                                 perm.begin() + static_cast<long>(std::min(n, off + batch)));
        return batches;
    }

    // Stratified batches for AP training: every batch gets at least one
    // positive and one negative.
    std::vector<std::uint32_t> pos, neg;
    for (std::uint32_t i = 0; i < n; ++i) (ds.labels[i] == 1 ? pos : neg).push_back(i);
    require(!pos.empty() && !neg.empty(), "AP training set needs positives and negatives");
    require(pos.size() >= nb, "AP training set has fewer positives (" +
                                  std::to_string(pos.size()) + ") than batches (" +
                                  std::to_string(nb) + "); increase batch size");
    require(neg.size() >= nb, "AP training set has fewer negatives than batches");
    rng.shuffle(pos);
    rng.shuffle(neg);

    std::vector<std::size_t> sizes(nb, batch);
    sizes.back() = n - batch * (nb - 1);
    // fair positive share per batch, capped so one slot stays negative
    std::vector<std::size_t> pshare(nb);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < nb; ++i) {
        pshare[i] = std::min(sizes[i] - 1,
                             std::max<std::size_t>(1, pos.size() * sizes[i] / n));
        assigned += pshare[i];
    }
    std::size_t guard = 0;
    while (assigned < pos.size()) {
        bool moved = false;
        for (std::size_t i = 0; i < nb && assigned < pos.size(); ++i)
            if (pshare[i] < sizes[i] - 1) {
                ++pshare[i];
                ++assigned;
                moved = true;
            }
        require(moved, "cannot place all positives with one negative per batch");
        ++guard;
        require(guard < n, "stratified batching failed to converge");
    }
    while (assigned > pos.size()) {
        for (std::size_t i = 0; i < nb && assigned > pos.size(); ++i)
            if (pshare[i] > 1) {
                --pshare[i];
                --assigned;
            }
    }

    std::vector<std::vector<std::uint32_t>> batches(nb);
    std::size_t pi = 0, ni = 0;
    for (std::size_t i = 0; i < nb; ++i) {
        for (std::size_t k = 0; k < pshare[i]; ++k) batches[i].push_back(pos[pi++]);
        for (std::size_t k = pshare[i]; k < sizes[i]; ++k) batches[i].push_back(neg[ni++]);
    }
    return batches;
}

// ---------------------------------------------------------------------------
// per-batch task realization
// ---------------------------------------------------------------------------

BatchTask make_batch_task(const RunConfig& cfg, const std::vector<int>& batch_labels,
                          const ScoreBatch& scores) {
    switch (cfg.task) {
        case TaskKind::multiclass:
            return tasks::multiclass_task(batch_labels, cfg.classes);
        case TaskKind::binary_ap: {
            std::vector<std::uint8_t> flags(batch_labels.size());
            for (std::size_t i = 0; i < batch_labels.size(); ++i) {
                require(batch_labels[i] == 0 || batch_labels[i] == 1,
                        "AP task labels must be 0/1 (run make_binary_labels first)");
                flags[i] = static_cast<std::uint8_t>(batch_labels[i]);
            }
            return tasks::ap_task(flags, scores);
        }
        case TaskKind::pose:
            return tasks::pose_task(batch_labels, cfg.grid, cfg.radius);
    }
    throw Error("unreachable task kind");
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> model_sizes(const RunConfig& cfg, std::size_t input_dim) {
    std::vector<std::size_t> sizes;
    sizes.push_back(input_dim);
    for (auto h : cfg.hidden) sizes.push_back(h);
    sizes.push_back(cfg.model_output_dim());
    return sizes;
}

RunConfig with_task_defaults(RunConfig cfg) {
    if (cfg.task == TaskKind::pose) cfg.anchors.pose_pixel_mode = true;
    return cfg;
}

}  // namespace

Trainer::Trainer(const RunConfig& cfg, std::size_t input_dim)
    : cfg_(with_task_defaults(cfg)), rng_(cfg.seed),
      model_(model_sizes(cfg_, input_dim), rng_),
      optimizer_(cfg_.optimizer, cfg_.rmsprop_decay, cfg_.rmsprop_eps) {
    cfg_.validate();
}

double Trainer::step(const Tensor& batch_inputs, const std::vector<int>& batch_labels) {
    require(!batch_labels.empty() && batch_inputs.rows() == batch_labels.size(),
            "batch inputs and labels disagree");
    if (diverged_) return std::numeric_limits<double>::quiet_NaN();

    ad::Tape tape;
    ad::Value x = tape.constant(batch_inputs);
    ad::Value out = model_.forward(tape, x);
    if (!out.tensor().all_finite()) {
        diverged_ = true;
        return std::numeric_limits<double>::quiet_NaN();
    }

    ad::Value loss{};
    switch (cfg_.loss) {
        case LossKind::ce:
            loss = tasks::cross_entropy(tape, out, batch_labels);
            break;
        case LossKind::mse: {
            Tensor targets =
                tasks::heatmap_targets(batch_labels, cfg_.grid, cfg_.heatmap_target);
            loss = tasks::mse_heatmap(tape, out, targets);
            break;
        }
        case LossKind::uniloss: {
            ScoreBatch sb(out.tensor());
            BatchTask task = make_batch_task(cfg_, batch_labels, sb);
            if (cfg_.binary_fraction < 1.0)
                task = tasks::subsample_task(task, cfg_.binary_fraction, rng_);
            const BinaryConfiguration current = harden(compute_comparisons(sb, task.spec));
            auto anchors = std::make_shared<AnchorSet>(
                build_anchor_set(task, current, cfg_.anchors, rng_));
            loss = uniloss_surrogate(tape, out, task, std::move(anchors), cfg_.temperature);
            break;
        }
    }

    const double loss_value = loss.tensor()[0];
    if (!std::isfinite(loss_value)) {
        diverged_ = true;
        return loss_value;
    }

    model_.zero_grad();
    tape.backward(loss);
    auto params = model_.parameters();
    optimizer_.step(params, cfg_.lr.at(epoch_));
    if (!model_.all_finite()) diverged_ = true;
    return loss_value;
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

namespace {

Tensor pooled_scores(const Mlp& model, const data::Dataset& split) {
    constexpr std::size_t chunk = 512;
    const std::size_t n = split.size();
    Tensor scores({n, model.output_dim()});
    for (std::size_t off = 0; off < n; off += chunk) {
        const std::size_t count = std::min(chunk, n - off);
        Tensor part({count, split.input_dim});
        std::copy_n(split.inputs.data() + off * split.input_dim, count * split.input_dim,
                    part.data());
        Tensor out = model.forward_plain(part);
        std::copy_n(out.data(), out.numel(), scores.data() + off * model.output_dim());
    }
    return scores;
}

}  // namespace

double evaluate(const Mlp& model, const data::Dataset& split, const RunConfig& cfg) {
    require(split.size() >= 1, "cannot evaluate an empty split");
    const Tensor scores = pooled_scores(model, split);
    switch (cfg.task) {
        case TaskKind::multiclass: {
            require(scores.cols() == cfg.classes, "model output width does not match classes");
            std::size_t correct = 0;
            for (std::size_t i = 0; i < scores.rows(); ++i) {
                std::size_t best = 0;
                for (std::size_t j = 1; j < scores.cols(); ++j)
                    if (scores(i, j) > scores(i, best)) best = j;
                correct += best == static_cast<std::size_t>(split.labels[i]);
            }
            return static_cast<double>(correct) / static_cast<double>(scores.rows());
        }
        case TaskKind::binary_ap: {
            std::vector<double> rank_score(scores.rows());
            if (scores.cols() == 1)
                for (std::size_t i = 0; i < scores.rows(); ++i) rank_score[i] = scores(i, 0);
            else if (scores.cols() == 2)
                for (std::size_t i = 0; i < scores.rows(); ++i)
                    rank_score[i] = scores(i, 1) - scores(i, 0);
            else
                throw Error("AP evaluation expects 1 or 2 output scores per example");
            std::vector<std::uint8_t> flags(split.labels.size());
            for (std::size_t i = 0; i < flags.size(); ++i) {
                require(split.labels[i] == 0 || split.labels[i] == 1,
                        "AP evaluation needs 0/1 labels");
                flags[i] = static_cast<std::uint8_t>(split.labels[i]);
            }
            return tasks::average_precision(rank_score, flags);
        }
        case TaskKind::pose: {
            const auto g = static_cast<long>(cfg.grid);
            require(scores.cols() == cfg.grid * cfg.grid,
                    "model output width does not match pose grid");
            const double r2 = cfg.radius * cfg.radius;
            std::size_t correct = 0;
            for (std::size_t i = 0; i < scores.rows(); ++i) {
                std::size_t best = 0;
                for (std::size_t j = 1; j < scores.cols(); ++j)
                    if (scores(i, j) > scores(i, best)) best = j;
                const long dr = static_cast<long>(best) / g - split.labels[i] / g;
                const long dc = static_cast<long>(best) % g - split.labels[i] % g;
                correct += static_cast<double>(dr * dr + dc * dc) <= r2;
            }
            return static_cast<double>(correct) / static_cast<double>(scores.rows());
        }
    }
    throw Error("unreachable task kind");
}

// ---------------------------------------------------------------------------
// train loop
// ---------------------------------------------------------------------------

TrainResult train(const RunConfig& cfg, const data::Dataset& train_set,
                  const data::Dataset& val_set) {
    cfg.validate();
    require(train_set.size() >= 1 && val_set.size() >= 1, "train/val splits must be nonempty");
    require(train_set.input_dim == val_set.input_dim, "train/val input widths differ");

    Trainer trainer(cfg, train_set.input_dim);
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    std::vector<EpochRecord> history;
    bool diverged = false;
    int diverged_epoch = -1;

    for (int epoch = 1; epoch <= cfg.epochs && !diverged; ++epoch) {
        trainer.set_epoch(epoch);
        double loss_sum = 0.0;
        std::size_t steps = 0;
        for (const auto& batch : make_batches(train_set, cfg, trainer.rng())) {
            std::vector<int> labels(batch.size());
            for (std::size_t i = 0; i < batch.size(); ++i)
                labels[i] = train_set.labels[batch[i]];
            const double loss = trainer.step(gather_rows(train_set.inputs, batch), labels);
            if (trainer.diverged()) {
                diverged = true;
                diverged_epoch = epoch;
                break;
            }
            loss_sum += loss;
            ++steps;
        }
        if (diverged) break;
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = steps ? loss_sum / static_cast<double>(steps) : 0.0;
        rec.train_metric = evaluate(trainer.model(), train_set, cfg);
        rec.val_metric = evaluate(trainer.model(), val_set, cfg);
        rec.wallclock_s = elapsed();
        history.push_back(rec);
    }

    return TrainResult{std::move(trainer.model()), std::move(history), diverged,
                       diverged_epoch};
}

}  // namespace uniloss::train
