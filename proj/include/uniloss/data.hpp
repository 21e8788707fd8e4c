// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0
//
// Dataset containers, bit-exact IDX (ubyte) file I/O, and the deterministic
// synthetic generators: a 10-class stroke-rendered digit corpus in MNIST
// layout and the toy single-joint pose task.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uniloss/tensor.hpp"

namespace uniloss::data {

struct Dataset {
    std::size_t input_dim = 0;
    Tensor inputs;            // N x input_dim, values in [0,1]
    std::vector<int> labels;  // class id, positive flag, or joint pixel index

    std::size_t size() const { return labels.size(); }
};

// ---------------------------------------------------------------------------
// IDX container (big-endian, ubyte payload)
// ---------------------------------------------------------------------------

struct IdxInfo {
    std::uint32_t magic = 0;
    std::vector<std::uint32_t> dims;
};

// Header + size validation without loading the payload.
IdxInfo read_idx_info(const std::string& path);

// N x (rows*cols) matrix scaled to [0,1]. Requires magic 0x00000803.
Tensor load_idx_images(const std::string& path);

// Label bytes as ints. Requires magic 0x00000801.
std::vector<int> load_idx_labels(const std::string& path);

// Writers quantize [0,1] doubles to bytes via round(v*255).
void write_idx_images(const std::string& path, const Tensor& images, std::size_t rows,
                      std::size_t cols);
void write_idx_labels(const std::string& path, const std::vector<int>& labels);

// ---------------------------------------------------------------------------
// task label helpers
// ---------------------------------------------------------------------------

// Zeros-vs-nonzeros: digit 0 is the positive class.
std::vector<std::uint8_t> make_binary_labels(const std::vector<int>& digit_labels);

// ---------------------------------------------------------------------------
// synthetic digit corpus
// ---------------------------------------------------------------------------

// 28x28 stroke-rendered digits with per-sample affine jitter and pixel noise;
// classes drawn uniformly. Deterministic per seed.
Dataset gen_digits(std::size_t count, std::uint64_t seed);

// Writes train/t10k image+label files in standard MNIST naming under dir.
void write_digit_files(const std::string& dir, std::size_t train_count,
                       std::size_t test_count, std::uint64_t seed);

// Loads <prefix>-images-idx3-ubyte / <prefix>-labels-idx1-ubyte from dir.
Dataset load_image_split(const std::string& dir, const std::string& prefix);

// ---------------------------------------------------------------------------
// toy pose
// ---------------------------------------------------------------------------

struct PoseGenConfig {
    std::size_t count = 1000;
    std::size_t grid = 16;
    double blob_sigma = 1.2;  // stddev of the bright blob
    double noise = 0.25;      // Gaussian pixel noise stddev
    std::size_t decoys = 2;   // fainter distractor blobs per image
    double decoy_sigma = 1.2; // decoy blob stddev
    std::uint64_t seed = 1;
};

// G x G images with one bright blob at a uniform random pixel, a few fainter
// decoy blobs, and Gaussian noise; label is the true blob-center pixel index.
Dataset gen_toy_pose(const PoseGenConfig& cfg);

// Writes <prefix>-images-idx3-ubyte / <prefix>-labels-idx1-ubyte (grid <= 16
// so pixel indices fit a label byte).
void write_pose_files(const std::string& dir, const std::string& prefix,
                      const PoseGenConfig& cfg);

// Deterministic train/validation split: the first `reserve` examples go to
// validation, the rest to training.
std::pair<Dataset, Dataset> split_off_validation(const Dataset& full, std::size_t reserve);

// First n examples (n = 0 means all).
Dataset take_prefix(const Dataset& full, std::size_t n);

}  // namespace uniloss::data
