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

#include <vector>

#include "specguard/numerics.hpp"

namespace specguard {

/// K unit vectors in R^d (columns of z) with pairwise inner product
/// -1/(K-1) and zero sum.
struct EtfFrame {
  Eigen::MatrixXd z;  // (d, K)

  Index classes() const { return z.cols(); }
  Index dim() const { return z.rows(); }
};

/// Simplex ETF in the first K-1 coordinates (Helmert basis of the
/// sum-zero subspace), zero-padded to d. Requires d >= K-1 and K >= 2.
EtfFrame make_simplex_etf(Index classes, Index dim);

/// Mean cross-entropy (1/K) sum_k CE(W z_k, k) with one sample per class.
double lastlayer_loss(const Eigen::MatrixXd& w, const EtfFrame& frame);

/// dL/dW for lastlayer_loss, assembled row by row from
///   -dL/dW_k = (1/K) [ (sum_{l != k} g_l(z_k)) z_k - sum_{l != k} g_k(z_l) z_l ]
/// with g(z) = softmax(W z).
Eigen::MatrixXd lastlayer_grad(const Eigen::MatrixXd& w, const EtfFrame& frame);

struct AlignmentStep {
  int step = 0;
  Eigen::VectorXd cosine;  // cos(W_k, z_k) per class
  Eigen::VectorXd norm;    // |W_k| per class
};

struct AlignmentTrajectory {
  std::vector<AlignmentStep> steps;  // step 0 is the initialization
  Eigen::MatrixXd w;                 // final weights (K, d)
  bool diverged = false;
};

/// Full-batch gradient descent on the readout only, starting from
/// N(0, init_std^2) weights. Logs every `log_every` steps and the last one.
/// `diverged` is set when the weights stop being finite or the mean cosine
/// ends more than 0.05 below its best value.
AlignmentTrajectory lastlayer_gd(const EtfFrame& frame, double init_std, double lr, int steps,
                                 Rng& rng, int log_every = 1);

/// (1 - z_k . z_c) / |z_c - z_k|.
double theta_x_analytic(const EtfFrame& frame, Index c, Index k);

}  // namespace specguard
