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

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "specguard/network.hpp"

namespace specguard {

/// Label-only access to a classifier. Every evaluated point counts as one
/// query.
class DecisionOracle {
 public:
  /// Maps a batch (one column per point) to labels.
  using BatchFn = std::function<std::vector<int>(const Eigen::MatrixXd&)>;

  DecisionOracle(BatchFn fn, Index input_dim);

  int query(const Eigen::VectorXd& x);
  std::vector<int> query_batch(const Eigen::MatrixXd& xs);

  long queries() const { return queries_; }
  Index input_dim() const { return input_dim_; }

 private:
  BatchFn fn_;
  Index input_dim_;
  long queries_ = 0;
};

/// Oracle answering predict(net, x). The net must outlive the oracle.
DecisionOracle net_oracle(const Net& net);
/// Two-class oracle: label 1 where normal . x > offset, else 0.
DecisionOracle halfspace_oracle(Eigen::VectorXd normal, double offset);

struct AttackConfig {
  int iterations = 40;           // boundary updates T
  int init_draws = 200;
  double init_std = 0.0;         // 0: 0.5 * input_range
  double input_range = 1.0;      // spread of valid input values
  int normal_probes = 100;       // B
  double hemisphere_ratio = 0.3; // r = ratio * |x_t - x|
  int tangent_halvings = 8;
  int normal_retries = 4;
  double bisect_tol = 1e-4;      // relative to the segment length

  void validate() const;
  double resolved_init_std() const { return init_std > 0.0 ? init_std : 0.5 * input_range; }
};

struct AttackResult {
  bool success = false;
  std::string failure;  // reason when !success
  Eigen::VectorXd x_adv;
  int adv_label = -1;
  double delta = std::numeric_limits<double>::infinity();
  long queries = 0;
  std::vector<double> trace;  // |x_t - x| after init and after each update
};

struct BisectResult {
  Eigen::VectorXd point;  // adversarial side
  int label = -1;         // oracle label at `point`
  double gap = 0.0;       // final segment length
  long queries = 0;
};

/// Bisection on [x_clean, x_adv] keeping the label of x_clean on one side.
/// Queries both endpoints, then ceil(log2(1/tol)) midpoints; the returned
/// point is on the adversarial side with gap <= tol * |x_adv - x_clean|.
/// Throws std::invalid_argument when the endpoint labels agree.
BisectResult boundary_bisect(DecisionOracle& oracle, const Eigen::VectorXd& x_clean,
                             const Eigen::VectorXd& x_adv, double tol);

/// Best of `draws` Gaussian perturbations x + std * N(0, I) whose label
/// differs from y, moved onto the boundary by bisection toward x. The
/// standard deviation doubles (up to `max_std`) while no draw flips.
std::optional<BisectResult> init_adversarial(DecisionOracle& oracle, const Eigen::VectorXd& x,
                                             int y, int draws, double std, double max_std,
                                             double tol, Rng& rng);

struct NormalEstimate {
  Eigen::VectorXd direction;  // unit, pointing into the adversarial side
  double radius = 0.0;        // probe radius finally used
  bool ok = false;            // false when every retry was one-sided
};

/// Monte-Carlo boundary normal at x_t from B probes at distance `radius`,
/// signed +1 when adversarial. The mean sign is subtracted (except for B = 1);
/// one-sided outcomes retry with half the radius up to `retries` times.
NormalEstimate estimate_normal(DecisionOracle& oracle, const Eigen::VectorXd& x_t, int y, int probes,
                               double radius, Rng& rng, int retries = 4);

struct TangentPoint {
  Eigen::VectorXd k;
  double radius = 0.0;     // r actually used
  bool degenerate = false; // normal parallel to x - x_t; random plane used
  bool on_hemisphere = false;
};

/// Tangent point from x to the sphere of radius r around x_t, in the plane of
/// x - x_t and `normal`:
///   k = x_t + (r^2/d) e1 + r sqrt(1 - r^2/d^2) e2,
/// e1 = (x - x_t)/d, e2 the unit component of `normal` orthogonal to e1.
/// r >= d is replaced by d/2. `on_hemisphere` reports (k - x_t) . normal >= 0.
TangentPoint tangent_point(const Eigen::VectorXd& x, const Eigen::VectorXd& x_t,
                           const Eigen::VectorXd& normal, double r, Rng* rng = nullptr);

/// Untargeted Tangent Attack. Requires oracle(x) == y.
AttackResult tangent_attack(DecisionOracle& oracle, const Eigen::VectorXd& x, int y,
                            const AttackConfig& cfg, Rng& rng);

/// Minimum over `directions` rays of the bisected distance to the first
/// label change within `max_radius` (inf when no ray finds one). Directions:
/// n = 1 both signs; n = 2 angles 2 pi j / D; n = 3 a Halton sequence on the
/// sphere, so a larger D always extends the smaller set. Each ray is scanned
/// at `scan_steps` points before bisecting to absolute tolerance `tol`.
double brute_force_distance(DecisionOracle& oracle, const Eigen::VectorXd& x, int y,
                            int directions, double tol, double max_radius,
                            int scan_steps = 512);

struct RobustnessStats {
  Index count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
  std::vector<double> thresholds;
  std::vector<double> proportion;  // fraction with distance >= threshold
};

/// Quartiles use linear interpolation between order statistics.
RobustnessStats robustness_report(const std::vector<double>& distances,
                                  const std::vector<double>& thresholds);

struct AttackRow {
  Index sample = 0;
  int true_label = 0;
  int adv_label = -1;
  double delta = 0.0;
  long queries = 0;
};

void write_attack_csv(std::ostream& out, const std::vector<AttackRow>& rows);

}  // namespace specguard
