// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment presets: canned run sets behind `uniloss preset <name>`.
//   ap-mnist          CE vs UniLoss on zeros-vs-nonzeros average precision
//   anchors-ablation  AP task across anchors-per-type counts
//   batch-ablation    UniLoss multiclass accuracy across batch sizes
//   multiclass-mnist  CE vs UniLoss 10-class accuracy parity
//   pose-sigma        MSE target-sigma sweep vs UniLoss on the toy pose task
//   fidelity          interpolation fidelity sweep over Hamming fractions

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uniloss/fidelity.hpp"
#include "uniloss/train.hpp"

namespace uniloss::presets {

struct PresetOptions {
    std::string data_dir = "data";
    std::string out_csv;            // metric log path; empty = no file
    int jobs = 2;                   // concurrent independent runs
    int seeds = 3;                  // seeds per configuration where applicable
    std::uint64_t base_seed = 1;
    std::vector<std::size_t> batch_sizes;  // batch-ablation override
    std::vector<int> anchor_counts;        // anchors-ablation override
    std::vector<double> pose_sigmas;       // pose-sigma MSE target override
    int epochs_override = 0;               // > 0 shrinks runs (smoke testing)
    std::size_t train_limit = 0;           // > 0 caps training examples
    std::size_t fidelity_samples = 256;
};

struct RunSummary {
    train::RunConfig cfg;
    double final_val_metric = 0.0;
    double final_train_metric = 0.0;
    double final_test_metric = 0.0;  // filled only by presets that hold out a test split
    bool diverged = false;
    int diverged_epoch = -1;
    std::vector<train::EpochRecord> history;
};

struct PresetOutcome {
    std::string name;
    std::vector<RunSummary> runs;
    std::optional<fidelity::FidelityReport> fidelity_report;
    std::string summary_text;
};

std::vector<std::string> preset_names();

PresetOutcome run_preset(const std::string& name, const PresetOptions& options);

// Shared dataset plumbing (also used by the CLI train/eval commands).
// Digit files are loaded from data_dir; a missing file produces an error
// naming the gen-digits command.
data::Dataset load_digit_split(const std::string& data_dir, const std::string& prefix);
std::vector<RunSummary> run_configs(const std::vector<train::RunConfig>& configs,
                                    const data::Dataset& train_set,
                                    const data::Dataset& val_set, int jobs,
                                    const std::string& out_csv);

}  // namespace uniloss::presets
