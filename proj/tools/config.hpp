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
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "specguard/attack.hpp"
#include "specguard/geometry.hpp"
#include "specguard/network.hpp"
#include "specguard/train.hpp"

namespace specguard::cli {

/// Raised for anything wrong with the configuration; maps to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataSection {
  std::string source = "xor";  // xor, xor-noisy, mnist
  Index points_per_cluster = 50;
  double noise_std = 0.2;
  std::uint64_t data_seed = 0;
  std::string dir;              // empty: SPECGUARD_DATA_DIR
  Index train_size = 10000;     // 0 keeps the full training split
  bool stratified = true;
  bool center = false;
};

struct ModelSection {
  std::vector<Index> hidden{8};
  Activation activation = Activation::gelu;
  bool readout_bias = true;
  InitOptions init;
};

struct AttackSection {
  AttackConfig cfg;
  std::string split = "train";  // train or test
  Index samples = 0;            // correctly classified points to attack; 0 = all
  std::string model = "model.json";
  std::vector<std::string> checkpoints;  // explicit checkpoints instead of seed dirs
  std::vector<double> thresholds{0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
};

struct GeometrySection {
  Rect rect;
  Index resolution = 101;
  double radius = 0.0;
  Index samples = 256;
};

struct EtfSection {
  Index classes = 3;
  Index dim = 2;
  double init_std = 0.001;
  double lr = 0.01;
  int steps = 5000;
  int log_every = 10;
};

struct RetrainSection {
  double l2 = 1.0;
  int max_iters = 5000;
  double grad_tol = 1e-6;
};

struct ExperimentConfig {
  std::string name = "run";
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path out_dir = "runs";
  DataSection data;
  ModelSection model;
  TrainConfig train;
  AttackSection attack;
  GeometrySection geometry;
  EtfSection etf;
  RetrainSection retrain;

  /// Cross-field checks; throws ConfigError.
  void validate() const;
};

/// Flat `section.key = value` text. '#' and ';' start comments. Unknown keys
/// and malformed values throw ConfigError naming the key and line.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key with its resolved value, in a stable order.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg);
std::string echo_config(const ExperimentConfig& cfg);

}  // namespace specguard::cli
