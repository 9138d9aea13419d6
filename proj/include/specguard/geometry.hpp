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

#include <optional>
#include <string>
#include <string_view>

#include "specguard/network.hpp"

namespace specguard {

/// Pull-back of the Euclidean feature metric: g = J^T J with J the input
/// Jacobian of the feature map at x.
struct MetricTensor {
  Eigen::MatrixXd g;
  Eigen::VectorXd x;
};

MetricTensor metric_tensor(const Net& net, const Eigen::VectorXd& x);
/// Largest eigenvalue of g.
double lambda_max(const MetricTensor& m);
/// sqrt(det g) from eigenvalues; negatives above -1e-12 are clamped to zero.
double volume_element(const MetricTensor& m);

struct Rect {
  double x_min = -1.5, x_max = 1.5;
  double y_min = -1.5, y_max = 1.5;
};

/// sqrt(det g) at cell centers of a res_y x res_x grid over `rect` (row i is
/// the i-th y cell from y_min). Requires input_dim == 2.
Eigen::MatrixXd volume_element_grid(const Net& net, const Rect& rect, Index res_x,
                                    Index res_y);

/// Highest logit among classes other than c.
int runner_up(const Eigen::Ref<const Eigen::VectorXd>& logits, int c);

/// Cosine between Phi(x) and (W_c - W_k); the readout bias is not included.
/// Throws std::domain_error when Phi(x) = 0 or W_c = W_k.
double theta_x(const Net& net, const Eigen::VectorXd& x, int c, int k);

enum class BoundMode { local, ball, certified };

std::string to_string(BoundMode mode);
BoundMode parse_bound_mode(std::string_view name);

/// Global bound on |grad Phi|_2: product of layer spectral norms times
/// max|phi'| of every activation layer.
double feature_lipschitz_bound(const Net& net);

/// Lower bound on the distance from x to the region where class k beats c:
///
///   ((W_c - W_k) Phi(x) + b_c - b_k) / |W_c - W_k|  /  denominator
///
/// with denominator |grad Phi(x)| (local), the maximum over x and `samples`
/// uniform points of B(x, radius) (ball), or feature_lipschitz_bound
/// (certified). Only the certified mode is a proof; local and ball are
/// estimates. A non-positive numerator gives 0. Throws std::invalid_argument
/// unless predict(net, x) == c and k != c.
double adv_lower_bound(const Net& net, const Eigen::VectorXd& x, int c, int k,
                       BoundMode mode, double radius = 0.0, Index samples = 256,
                       Rng* rng = nullptr);

/// Certified lower bound on the adversarial distance of x: the certified
/// bound minimized over every k != c.
double certified_radius(const Net& net, const Eigen::VectorXd& x, int c);

struct GeometryReport {
  int c = 0;
  int k = 0;
  double theta_x = 0.0;
  double feat_norm = 0.0;
  double lambda_max_g = 0.0;
  double bound_local = 0.0;  // estimate
  std::optional<double> bound_ball;  // estimate, present when radius > 0
  double bound_certified = 0.0;
};

struct GeometryOptions {
  double radius = 0.0;  // 0 skips the ball bound
  Index samples = 256;
};

/// Report for a correctly classified x with comparison class `k` (runner-up
/// logit class when absent).
GeometryReport geometry_report(const Net& net, const Eigen::VectorXd& x, int c,
                               std::optional<int> k, const GeometryOptions& opts,
                               Rng& rng);

}  // namespace specguard
