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

#include "specguard/attack.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

namespace specguard {

namespace {

int bisect_steps(double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("bisection tolerance must be > 0");
  if (tol >= 1.0) return 0;
  return static_cast<int>(std::ceil(std::log2(1.0 / tol) - 1e-12));
}

// Bisection with endpoint labels already known: y at x_clean, adv_label at x_adv.
BisectResult bisect_known(DecisionOracle& oracle, const Eigen::VectorXd& x_clean, int y,
                          const Eigen::VectorXd& x_adv, int adv_label, double tol) {
  const long before = oracle.queries();
  const Eigen::VectorXd dir = x_adv - x_clean;
  double lo = 0.0, hi = 1.0;
  int hi_label = adv_label;
  const int steps = bisect_steps(tol);
  for (int s = 0; s < steps; ++s) {
    const double mid = 0.5 * (lo + hi);
    const int label = oracle.query(x_clean + mid * dir);
    if (label == y) {
      lo = mid;
    } else {
      hi = mid;
      hi_label = label;
    }
  }
  BisectResult r;
  r.point = hi == 1.0 ? x_adv : Eigen::VectorXd(x_clean + hi * dir);
  r.label = hi_label;
  r.gap = (hi - lo) * dir.norm();
  r.queries = oracle.queries() - before;
  return r;
}

double halton(std::uint64_t index, std::uint64_t base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace

DecisionOracle::DecisionOracle(BatchFn fn, Index input_dim)
    : fn_(std::move(fn)), input_dim_(input_dim) {
  if (!fn_) throw std::invalid_argument("DecisionOracle: empty query function");
}

int DecisionOracle::query(const Eigen::VectorXd& x) {
  if (x.size() != input_dim_) throw std::invalid_argument("oracle: input dimension mismatch");
  ++queries_;
  return fn_(x).front();
}

std::vector<int> DecisionOracle::query_batch(const Eigen::MatrixXd& xs) {
  if (xs.rows() != input_dim_) throw std::invalid_argument("oracle: input dimension mismatch");
  queries_ += xs.cols();
  if (xs.cols() == 0) return {};
  return fn_(xs);
}

DecisionOracle net_oracle(const Net& net) {
  return DecisionOracle([&net](const Eigen::MatrixXd& xs) { return predict_batch(net, xs); },
                        net.input_dim);
}

DecisionOracle halfspace_oracle(Eigen::VectorXd normal, double offset) {
  const Index n = normal.size();
  return DecisionOracle(
      [normal = std::move(normal), offset](const Eigen::MatrixXd& xs) {
        std::vector<int> out(static_cast<size_t>(xs.cols()));
        for (Index j = 0; j < xs.cols(); ++j) out[static_cast<size_t>(j)] = normal.dot(xs.col(j)) > offset ? 1 : 0;
        return out;
      },
      n);
}

void AttackConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("attack.iterations must be >= 1");
  if (init_draws < 1) throw std::invalid_argument("attack.init_draws must be >= 1");
  if (init_std < 0.0) throw std::invalid_argument("attack.init_std must be >= 0");
  if (!(input_range > 0.0)) throw std::invalid_argument("attack.input_range must be > 0");
  if (normal_probes < 1) throw std::invalid_argument("attack.probes must be >= 1");
  if (!(hemisphere_ratio > 0.0 && hemisphere_ratio < 1.0)) {
    throw std::invalid_argument("attack.hemisphere_ratio must be in (0, 1)");
  }
  if (tangent_halvings < 0 || normal_retries < 0) {
    throw std::invalid_argument("attack retry counts must be >= 0");
  }
  if (!(bisect_tol > 0.0 && bisect_tol < 1.0)) throw std::invalid_argument("attack.bisect_tol must be in (0, 1)");
}

BisectResult boundary_bisect(DecisionOracle& oracle, const Eigen::VectorXd& x_clean,
                             const Eigen::VectorXd& x_adv, double tol) {
  const long before = oracle.queries();
  const int y = oracle.query(x_clean);
  const int adv = oracle.query(x_adv);
  if (y == adv) throw std::invalid_argument("boundary_bisect: endpoints have the same label");
  BisectResult r = bisect_known(oracle, x_clean, y, x_adv, adv, tol);
  r.queries = oracle.queries() - before;
  return r;
}

std::optional<BisectResult> init_adversarial(DecisionOracle& oracle, const Eigen::VectorXd& x,
                                             int y, int draws, double std, double max_std,
                                             double tol, Rng& rng) {
  if (draws < 1) throw std::invalid_argument("init_adversarial: draws must be >= 1");
  if (!(std > 0.0)) throw std::invalid_argument("init_adversarial: std must be > 0");
  double cur = std;
  while (true) {
    Eigen::MatrixXd pts = gaussian_matrix(rng, x.size(), draws, 0.0, cur);
    pts.colwise() += x;
    const std::vector<int> labels = oracle.query_batch(pts);
    Index best = -1;
    double best_dist = 0.0;
    for (Index j = 0; j < draws; ++j) {
      if (labels[static_cast<size_t>(j)] == y) continue;
      const double dist = (pts.col(j) - x).norm();
      if (best < 0 || dist < best_dist) {
        best = j;
        best_dist = dist;
      }
    }
    if (best >= 0) {
      return bisect_known(oracle, x, y, pts.col(best), labels[static_cast<size_t>(best)], tol);
    }
    if (cur >= max_std) return std::nullopt;
    cur = std::min(2.0 * cur, max_std);
  }
}

NormalEstimate estimate_normal(DecisionOracle& oracle, const Eigen::VectorXd& x_t, int y, int probes,
                               double radius, Rng& rng, int retries) {
  if (probes < 1) throw std::invalid_argument("estimate_normal: probes must be >= 1");
  if (!(radius > 0.0)) throw std::invalid_argument("estimate_normal: radius must be > 0");
  const Index n = x_t.size();
  NormalEstimate est;
  Eigen::VectorXd fallback;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    Eigen::MatrixXd dirs(n, probes);
    for (int b = 0; b < probes; ++b) dirs.col(b) = random_unit_vector(rng, n);
    const Eigen::MatrixXd pts = (radius * dirs).colwise() + x_t;
    const std::vector<int> labels = oracle.query_batch(pts);
    Eigen::VectorXd sign(probes);
    for (int b = 0; b < probes; ++b) sign[b] = labels[static_cast<size_t>(b)] != y ? 1.0 : -1.0;
    est.radius = radius;

    if (probes == 1) {
      est.direction = sign[0] * dirs.col(0);
      est.ok = true;
      return est;
    }
    const double mean = sign.mean();
    if (std::abs(mean) < 1.0) {
      const Eigen::VectorXd v = dirs * (sign.array() - mean).matrix();
      const double norm = v.norm();
      if (norm > 0.0) {
        est.direction = v / norm;
        est.ok = true;
        return est;
      }
    }
    fallback = dirs * sign;
    radius *= 0.5;
  }
  const double norm = fallback.norm();
  est.direction = norm > 0.0 ? Eigen::VectorXd(fallback / norm) : random_unit_vector(rng, n);
  est.ok = false;
  return est;
}

TangentPoint tangent_point(const Eigen::VectorXd& x, const Eigen::VectorXd& x_t,
                           const Eigen::VectorXd& normal, double r, Rng* rng) {
  if (x.size() != x_t.size() || normal.size() != x.size()) {
    throw std::invalid_argument("tangent_point: dimension mismatch");
  }
  const double d = (x - x_t).norm();
  if (!(d > 0.0)) throw std::invalid_argument("tangent_point: x_t coincides with x");
  if (!(r > 0.0)) throw std::invalid_argument("tangent_point: r must be > 0");
  TangentPoint tp;
  if (r >= d) r = 0.5 * d;
  tp.radius = r;

  const Eigen::VectorXd e1 = (x - x_t) / d;
  Eigen::VectorXd perp = normal - normal.dot(e1) * e1;
  if (perp.norm() <= 1e-12 * std::max(normal.norm(), 1e-300)) {
    tp.degenerate = true;
    perp = Eigen::VectorXd::Zero(x.size());
    for (int attempt = 0; attempt < 8 && perp.norm() <= 1e-6; ++attempt) {
      Eigen::VectorXd cand;
      if (rng != nullptr) {
        cand = random_unit_vector(*rng, x.size());
      } else {
        Index axis = 0;
        e1.cwiseAbs().minCoeff(&axis);
        cand = Eigen::VectorXd::Unit(x.size(), axis);
      }
      perp = cand - cand.dot(e1) * e1;
    }
    if (perp.norm() <= 1e-6) throw std::invalid_argument("tangent_point: no orthogonal direction");
  }
  const Eigen::VectorXd e2 = perp.normalized();
  const double rho = r / d;
  tp.k = x_t + (r * rho) * e1 + r * std::sqrt(1.0 - rho * rho) * e2;
  tp.on_hemisphere = (tp.k - x_t).dot(normal) >= 0.0;
  return tp;
}

AttackResult tangent_attack(DecisionOracle& oracle, const Eigen::VectorXd& x, int y,
                            const AttackConfig& cfg, Rng& rng) {
  cfg.validate();
  const long start = oracle.queries();
  if (oracle.query(x) != y) throw std::invalid_argument("tangent_attack: x is not classified as y");

  AttackResult res;
  const std::optional<BisectResult> init =
      init_adversarial(oracle, x, y, cfg.init_draws, cfg.resolved_init_std(),
                       std::max(cfg.input_range, cfg.resolved_init_std()), cfg.bisect_tol, rng);
  if (!init) {
    res.failure = "initialization found no adversarial point";
    res.x_adv = x;
    res.queries = oracle.queries() - start;
    return res;
  }

  Eigen::VectorXd x_t = init->point;
  double dist = (x_t - x).norm();
  res.trace.push_back(dist);
  const double sqrt_n = std::sqrt(static_cast<double>(x.size()));

  for (int t = 0; t < cfg.iterations && dist > 0.0; ++t) {
    const NormalEstimate ne =
        estimate_normal(oracle, x_t, y, cfg.normal_probes, dist / sqrt_n, rng, cfg.normal_retries);
    const Eigen::VectorXd normal = ne.ok ? ne.direction : Eigen::VectorXd((x_t - x) / dist);
    double r = cfg.hemisphere_ratio * dist;
    for (int h = 0; h <= cfg.tangent_halvings; ++h, r *= 0.5) {
      const TangentPoint tp = tangent_point(x, x_t, normal, r, &rng);
      if (!tp.on_hemisphere) continue;
      const int lk = oracle.query(tp.k);
      if (lk == y) continue;
      const BisectResult b = bisect_known(oracle, x, y, tp.k, lk, cfg.bisect_tol);
      const double nd = (b.point - x).norm();
      if (nd < dist) {
        x_t = b.point;
        dist = nd;
      }
      break;
    }
    res.trace.push_back(dist);
  }

  // The attack only ever moves to points the oracle labelled adversarial.
  const int final_label = oracle.query(x_t);
  if (final_label == y) throw std::logic_error("tangent_attack: result is not adversarial");
  res.success = true;
  res.x_adv = x_t;
  res.adv_label = final_label;
  res.delta = dist;
  res.queries = oracle.queries() - start;
  return res;
}

double brute_force_distance(DecisionOracle& oracle, const Eigen::VectorXd& x, int y,
                            int directions, double tol, double max_radius, int scan_steps) {
  const Index n = x.size();
  if (n < 1 || n > 3) throw std::invalid_argument("brute_force_distance supports n <= 3");
  if (directions < 1) throw std::invalid_argument("brute_force_distance: directions must be >= 1");
  if (!(tol > 0.0) || !(max_radius > 0.0) || scan_steps < 1) {
    throw std::invalid_argument("brute_force_distance: tol, max_radius and scan_steps must be positive");
  }

  std::vector<Eigen::VectorXd> dirs;
  if (n == 1) {
    dirs = {Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, -1.0)};
  } else if (n == 2) {
    for (int j = 0; j < directions; ++j) {
      const double a = 2.0 * std::numbers::pi * j / directions;
      dirs.push_back(Eigen::Vector2d(std::cos(a), std::sin(a)));
    }
  } else {
    for (int j = 0; j < directions; ++j) {
      const double z = 1.0 - 2.0 * halton(static_cast<std::uint64_t>(j) + 1, 2);
      const double phi = 2.0 * std::numbers::pi * halton(static_cast<std::uint64_t>(j) + 1, 3);
      const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      dirs.push_back(Eigen::Vector3d(s * std::cos(phi), s * std::sin(phi), z));
    }
  }

  double best = std::numeric_limits<double>::infinity();
  const double h = max_radius / scan_steps;
  Eigen::MatrixXd pts(n, scan_steps);
  for (const Eigen::VectorXd& dir : dirs) {
    for (int s = 0; s < scan_steps; ++s) pts.col(s) = x + (h * (s + 1)) * dir;
    const std::vector<int> labels = oracle.query_batch(pts);
    int first = -1;
    for (int s = 0; s < scan_steps; ++s) {
      if (labels[static_cast<size_t>(s)] != y) {
        first = s;
        break;
      }
    }
    if (first < 0) continue;
    double lo = h * first, hi = h * (first + 1);
    if (lo >= best) continue;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (oracle.query(x + mid * dir) == y) lo = mid;
      else hi = mid;
    }
    best = std::min(best, hi);
  }
  return best;
}

RobustnessStats robustness_report(const std::vector<double>& distances,
                                  const std::vector<double>& thresholds) {
  if (distances.empty()) throw std::invalid_argument("robustness_report: no distances");
  RobustnessStats st;
  std::vector<double> s = distances;
  std::sort(s.begin(), s.end());
  st.count = static_cast<Index>(s.size());
  double sum = 0.0;
  for (double v : s) sum += v;
  st.mean = sum / static_cast<double>(s.size());
  double ss = 0.0;
  for (double v : s) ss += (v - st.mean) * (v - st.mean);
  st.stddev = std::sqrt(ss / static_cast<double>(s.size()));
  st.min = s.front();
  st.max = s.back();
  st.q1 = quantile_sorted(s, 0.25);
  st.median = quantile_sorted(s, 0.5);
  st.q3 = quantile_sorted(s, 0.75);
  st.thresholds = thresholds;
  for (double tau : thresholds) {
    const auto it = std::lower_bound(s.begin(), s.end(), tau);
    st.proportion.push_back(static_cast<double>(s.end() - it) / static_cast<double>(s.size()));
  }
  return st;
}

void write_attack_csv(std::ostream& out, const std::vector<AttackRow>& rows) {
  out << "sample,true_label,adv_label,delta,queries\n";
  for (const AttackRow& r : rows) {
    out << r.sample << ',' << r.true_label << ',' << r.adv_label << ',' << fmt(r.delta) << ','
        << r.queries << '\n';
  }
}

}  // namespace specguard
