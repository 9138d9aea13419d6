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
#include <iosfwd>
#include <optional>
#include <vector>

#include "specguard/data.hpp"
#include "specguard/network.hpp"
#include "specguard/regularize.hpp"

namespace specguard {

struct TrainConfig {
  int epochs = 1;
  Index batch_size = 0;  // 0 or >= dataset size: full batch
  double lr = 0.1;
  double momentum = 0.0;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  RegConfig reg;
  std::vector<Index> track_samples;  // training-set indices
  bool log_sigma2 = true;

  void validate() const;
};

struct ConfidencePoint {
  Index sample = 0;
  int c = 0;  // true label
  int k = 0;  // runner-up logit class
  double theta = 0.0;  // NaN when undefined
  double feat_norm = 0.0;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;     // mean task loss over the epoch's batches
  double penalty = 0.0;  // penalty after the last update of the epoch
  double train_acc = 0.0;
  double test_acc = 0.0;  // NaN without a test set
  std::vector<double> sigma2;  // per weight layer, features then readout
  std::vector<ConfidencePoint> tracked;
};

struct TrainLog {
  EpochRecord initial;  // state before the first update, logged as epoch 0
  std::vector<EpochRecord> epochs;  // one per epoch, numbered from 1
  std::optional<Net> burn_in_snapshot;  // weights when the penalty switched on

  /// One row per record with full-precision numbers.
  void write_csv(std::ostream& out) const;
};

/// Raised when the loss or the weights stop being finite.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, int epoch, long step, Net snapshot)
      : NumericError(what), epoch_(epoch), step_(step), snapshot_(std::move(snapshot)) {}
  int epoch() const { return epoch_; }
  long step() const { return step_; }
  const Net& snapshot() const { return snapshot_; }

 private:
  int epoch_;
  long step_;
  Net snapshot_;
};

/// Heavy-ball step: v <- momentum v + grad + weight_decay param;
/// param <- param - lr v.
template <typename P, typename G, typename V>
void sgd_step(P&& param, const G& grad, V& velocity, double lr, double momentum,
              double weight_decay) {
  velocity = momentum * velocity + grad + weight_decay * param;
  param -= lr * velocity;
}

/// Applies sgd_step to every weight and bias of `net`.
void sgd_step(Net& net, const Gradients& grads, Gradients& velocity, double lr,
              double momentum, double weight_decay);

/// Mini-batch SGD on mean cross-entropy plus the configured penalty, which is
/// skipped before reg.burn_in_epoch. Epochs are 0-based internally; the
/// shuffling and power-iteration streams derive from cfg.seed. Throws
/// DivergenceError on a non-finite loss.
TrainLog train_supervised(Net& net, const Dataset& train, const TrainConfig& cfg,
                          const Dataset* test = nullptr);

double accuracy(const Net& net, const Dataset& ds);

/// theta_x and |Phi(x)| for each column of `inputs`, using the true label as c
/// and the runner-up logit class as k.
std::vector<ConfidencePoint> track_confidence(const Net& net, const Eigen::MatrixXd& inputs,
                                              const std::vector<int>& labels);

struct ReadoutFitOptions {
  int max_iters = 5000;
  double grad_tol = 1e-6;
  int memory = 10;
};

struct ReadoutFit {
  DenseLayer readout;
  double objective = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Multinomial logistic regression on frozen features (one column per
/// sample): minimizes sum_i CE_i + (l2/2) |W|_F^2 by L-BFGS. The bias is
/// unpenalized and kept in the sum-zero gauge.
ReadoutFit retrain_readout(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                           int classes, double l2, const ReadoutFitOptions& opts = {});

/// Objective and gradient of retrain_readout at (w, b).
double readout_objective(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                         const Eigen::MatrixXd& w, const Eigen::VectorXd& b, double l2,
                         Eigen::MatrixXd* grad_w = nullptr, Eigen::VectorXd* grad_b = nullptr);

}  // namespace specguard
