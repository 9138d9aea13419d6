// Copyright 2026 The specguard Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "specguard/numerics.hpp"

namespace specguard {

/// Malformed dataset file; `offset` is the byte position where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

/// How stored inputs relate to raw values: x = raw * scale - mean.
struct Normalization {
  double scale = 1.0;
  bool centered = false;
  Eigen::VectorXd mean;  // per feature; empty unless centered
  double value_min = 0.0;  // declared range of raw * scale
  double value_max = 1.0;
  std::string unit = "raw";

  double range() const { return value_max - value_min; }
};

/// Labeled samples, one column of `inputs` per sample.
struct Dataset {
  Eigen::MatrixXd inputs;
  std::vector<int> labels;
  int classes = 0;
  std::string split = "train";
  Normalization norm;
  std::vector<Index> sample_shape;  // e.g. {2} or {1, 28, 28}

  Index size() const { return inputs.cols(); }
  Index dim() const { return inputs.rows(); }

  /// Throws std::invalid_argument when labels or shapes are inconsistent.
  void validate() const;
  /// Samples at `indices`, in that order.
  Dataset select(const std::vector<Index>& indices) const;
};

/// Clean XOR: the four corners of [-1, 1]^2 with label 1 when the coordinate
/// signs differ. Noisy XOR: `points_per_cluster` Gaussian draws per corner.
Dataset xor_dataset(bool noisy, Index points_per_cluster, double noise_std, Rng& rng);

/// Reads an IDX image/label pair; pixels are scaled to [0, 1] and each image
/// is flattened row-major into one column.
Dataset load_mnist_idx(const std::filesystem::path& image_path,
                       const std::filesystem::path& label_path);

struct MnistFiles {
  std::filesystem::path train_images, train_labels, test_images, test_labels;
};

/// Looks for the standard IDX file names under root/mnist and root.
std::optional<MnistFiles> find_mnist(const std::filesystem::path& root);

/// m samples without replacement. Stratified sampling allocates per-class
/// counts by largest remainder, so each class is within one sample of its
/// proportional share.
Dataset subset_sample(const Dataset& ds, Index m, bool stratified, Rng& rng);

/// Subtracts the per-feature mean of `reference` (usually the training split)
/// from `ds` and records it in the normalization metadata.
void center(Dataset& ds, const Eigen::VectorXd& mean);
Eigen::VectorXd feature_mean(const Dataset& ds);

/// Versioned little-endian binary cache; loading restores every field
/// bit-exactly.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace specguard
