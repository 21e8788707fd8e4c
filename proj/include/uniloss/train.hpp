// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0
//
// Mini-batch training harness: MLP models, SGD/RMSProp, batching (stratified
// for the AP task), per-step anchor resampling for the surrogate loss, and
// whole-split metric evaluation through the direct decoder/evaluator route.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "uniloss/anchors.hpp"
#include "uniloss/autodiff.hpp"
#include "uniloss/data.hpp"
#include "uniloss/rng.hpp"
#include "uniloss/tasks.hpp"

namespace uniloss::train {

// ---------------------------------------------------------------------------
// model
// ---------------------------------------------------------------------------

class Mlp {
public:
    // sizes = {input, hidden..., output}; ReLU on hidden layers, linear output.
    // Weights and biases initialized uniform in +-1/sqrt(fan_in).
    Mlp(std::vector<std::size_t> sizes, Rng& rng);

    ad::Value forward(ad::Tape& tape, ad::Value input);
    Tensor forward_plain(const Tensor& input) const;  // identical math, no tape

    std::vector<ad::Parameter*> parameters();
    void zero_grad();
    bool all_finite() const;

    const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
    std::size_t output_dim() const { return sizes_.back(); }

    void save(const std::string& path) const;
    static Mlp load(const std::string& path);

private:
    Mlp() = default;
    std::vector<std::size_t> sizes_;
    std::vector<ad::Parameter> weights_;  // [in x out] per layer
    std::vector<ad::Parameter> biases_;   // [out] per layer
};

// ---------------------------------------------------------------------------
// optimization
// ---------------------------------------------------------------------------

enum class OptimizerKind { sgd, rmsprop };
enum class LossKind { uniloss, ce, mse };
enum class TaskKind { multiclass, binary_ap, pose };

const char* to_string(LossKind k);
const char* to_string(TaskKind k);
LossKind loss_from_string(const std::string& s);
TaskKind task_from_string(const std::string& s);
OptimizerKind optimizer_from_string(const std::string& s);

struct LrSchedule {
    double initial = 0.01;
    int decay_start = 0;  // first decay epoch (1-based); 0 disables decay
    int decay_every = 10;
    int decay_until = 0;  // last epoch at which a decay may fire; 0 = no bound
    double decay_factor = 1.0;

    double at(int epoch) const;  // epoch is 1-based
};

class Optimizer {
public:
    Optimizer(OptimizerKind kind, double rmsprop_decay = 0.99, double rmsprop_eps = 1e-8);
    void step(const std::vector<ad::Parameter*>& params, double lr);

private:
    OptimizerKind kind_;
    double decay_, eps_;
    std::vector<Tensor> accum_;  // RMSProp state, lazily sized
};

// ---------------------------------------------------------------------------
// run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
    std::string run_id = "run";
    TaskKind task = TaskKind::multiclass;
    LossKind loss = LossKind::ce;
    std::size_t batch_size = 128;
    int epochs = 30;
    std::uint64_t seed = 1;
    AnchorPolicy anchors;           // pose runs force pose_pixel_mode
    double binary_fraction = 1.0;   // < 1 enables partial-binary subsampling
    double temperature = 1.0;       // sigmoid relaxation temperature
    LrSchedule lr;
    OptimizerKind optimizer = OptimizerKind::sgd;
    double rmsprop_decay = 0.99;
    double rmsprop_eps = 1e-8;
    std::vector<std::size_t> hidden = {500, 300};

    // task parameters
    std::size_t classes = 10;                    // multiclass
    std::size_t grid = 16;                       // pose
    double radius = 2.0;                         // pose
    tasks::GaussianHeatmapTarget heatmap_target; // mse baseline

    void validate() const;
    std::size_t model_output_dim() const;
    std::map<std::string, std::string> as_config_map() const;
};

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;    // mean surrogate/baseline loss over steps
    double train_metric = 0.0;  // true metric via the direct route
    double val_metric = 0.0;
    double wallclock_s = 0.0;
};

struct TrainResult {
    Mlp model;
    std::vector<EpochRecord> history;
    bool diverged = false;
    int diverged_epoch = -1;

    double final_val_metric() const { return history.empty() ? 0.0 : history.back().val_metric; }
};

// Drives single gradient steps; train() uses it, tests can too.
class Trainer {
public:
    Trainer(const RunConfig& cfg, std::size_t input_dim);

    // One gradient step on a batch; returns the loss value. Non-finite loss
    // or parameters mark the trainer diverged and leave the model untouched
    // thereafter.
    double step(const Tensor& batch_inputs, const std::vector<int>& batch_labels);

    void set_epoch(int epoch) { epoch_ = epoch; }  // 1-based, for the lr schedule
    Mlp& model() { return model_; }
    const RunConfig& config() const { return cfg_; }
    Rng& rng() { return rng_; }
    bool diverged() const { return diverged_; }

private:
    RunConfig cfg_;
    Rng rng_;
    Mlp model_;
    Optimizer optimizer_;
    int epoch_ = 1;
    bool diverged_ = false;
};

// Full training run with per-epoch train/validation metric evaluation.
// Deterministic for a fixed (config, datasets) pair.
TrainResult train(const RunConfig& cfg, const data::Dataset& train_set,
                  const data::Dataset& val_set);

// True metric of a model on a whole split via the direct route; AP is
// computed on the pooled ranking of the entire split, so it does not depend
// on any batch partition.
double evaluate(const Mlp& model, const data::Dataset& split, const RunConfig& cfg);

// Batch index lists for one epoch; AP batches are stratified so every batch
// holds at least one positive and one negative.
std::vector<std::vector<std::uint32_t>> make_batches(const data::Dataset& ds,
                                                     const RunConfig& cfg, Rng& rng);

// Gathers rows of a dataset into a dense batch.
Tensor gather_rows(const Tensor& inputs, const std::vector<std::uint32_t>& rows);

// Builds the per-batch task realization used by the surrogate loss.
BatchTask make_batch_task(const RunConfig& cfg, const std::vector<int>& batch_labels,
                          const ScoreBatch& scores);

}  // namespace uniloss::train
