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

#include "specguard/etf.hpp"

#include <cmath>

namespace specguard {

namespace {

Eigen::VectorXd softmax_col(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

AlignmentStep measure(const Eigen::MatrixXd& w, const EtfFrame& frame, int step) {
  AlignmentStep s;
  s.step = step;
  s.cosine.resize(frame.classes());
  s.norm.resize(frame.classes());
  for (Index k = 0; k < frame.classes(); ++k) {
    const double n = w.row(k).norm();
    s.norm[k] = n;
    s.cosine[k] = n > 0.0 ? w.row(k).dot(frame.z.col(k).transpose()) / (n * frame.z.col(k).norm())
                          : 0.0;
  }
  return s;
}

}  // namespace

EtfFrame make_simplex_etf(Index classes, Index dim) {
  if (classes < 2) throw std::invalid_argument("make_simplex_etf: need K >= 2");
  if (dim < classes - 1) throw std::invalid_argument("make_simplex_etf: need d >= K - 1");
  const double kd = static_cast<double>(classes);
  // Row j of the Helmert matrix: j ones, then -j, normalized.
  Eigen::MatrixXd helmert = Eigen::MatrixXd::Zero(classes - 1, classes);
  for (Index j = 1; j < classes; ++j) {
    const double norm = std::sqrt(static_cast<double>(j * (j + 1)));
    helmert.row(j - 1).head(j).setConstant(1.0 / norm);
    helmert(j - 1, j) = -static_cast<double>(j) / norm;
  }
  EtfFrame frame;
  frame.z = Eigen::MatrixXd::Zero(dim, classes);
  frame.z.topRows(classes - 1) = std::sqrt(kd / (kd - 1.0)) * helmert;
  return frame;
}

double lastlayer_loss(const Eigen::MatrixXd& w, const EtfFrame& frame) {
  if (w.rows() != frame.classes() || w.cols() != frame.dim()) {
    throw std::invalid_argument("lastlayer_loss: W must be (K, d)");
  }
  double total = 0.0;
  for (Index k = 0; k < frame.classes(); ++k) {
    const Eigen::VectorXd logits = w * frame.z.col(k);
    const double m = logits.maxCoeff();
    total += std::log((logits.array() - m).exp().sum()) + m - logits[k];
  }
  return total / static_cast<double>(frame.classes());
}

Eigen::MatrixXd lastlayer_grad(const Eigen::MatrixXd& w, const EtfFrame& frame) {
  if (w.rows() != frame.classes() || w.cols() != frame.dim()) {
    throw std::invalid_argument("lastlayer_grad: W must be (K, d)");
  }
  const Index kc = frame.classes();
  // probs(l, i) = g_l(z_i).
  Eigen::MatrixXd probs(kc, kc);
  for (Index i = 0; i < kc; ++i) probs.col(i) = softmax_col(w * frame.z.col(i));

  Eigen::MatrixXd grad(kc, frame.dim());
  for (Index k = 0; k < kc; ++k) {
    double others = 0.0;
    Eigen::VectorXd pull = Eigen::VectorXd::Zero(frame.dim());
    for (Index l = 0; l < kc; ++l) {
      if (l == k) continue;
      others += probs(l, k);
      pull += probs(k, l) * frame.z.col(l);
    }
    const Eigen::VectorXd descent = (others * frame.z.col(k) - pull) / static_cast<double>(kc);
    grad.row(k) = -descent.transpose();
  }
  return grad;
}

AlignmentTrajectory lastlayer_gd(const EtfFrame& frame, double init_std, double lr, int steps,
                                 Rng& rng, int log_every) {
  if (steps < 0) throw std::invalid_argument("lastlayer_gd: steps must be >= 0");
  if (!(lr >= 0.0)) throw std::invalid_argument("lastlayer_gd: lr must be >= 0");
  if (log_every < 1) throw std::invalid_argument("lastlayer_gd: log_every must be >= 1");
  AlignmentTrajectory traj;
  traj.w = gaussian_matrix(rng, frame.classes(), frame.dim(), 0.0, init_std);
  traj.steps.push_back(measure(traj.w, frame, 0));
  double best = traj.steps.back().cosine.mean();
  for (int s = 1; s <= steps; ++s) {
    traj.w -= lr * lastlayer_grad(traj.w, frame);
    if (!traj.w.allFinite()) {
      traj.diverged = true;
      break;
    }
    if (s % log_every == 0 || s == steps) {
      traj.steps.push_back(measure(traj.w, frame, s));
      best = std::max(best, traj.steps.back().cosine.mean());
    }
  }
  if (!traj.diverged) traj.diverged = traj.steps.back().cosine.mean() < best - 0.05;
  return traj;
}

double theta_x_analytic(const EtfFrame& frame, Index c, Index k) {
  if (c == k) throw std::invalid_argument("theta_x_analytic: c must differ from k");
  if (c < 0 || k < 0 || c >= frame.classes() || k >= frame.classes()) {
    throw std::invalid_argument("theta_x_analytic: class out of range");
  }
  const Eigen::VectorXd zc = frame.z.col(c), zk = frame.z.col(k);
  return (1.0 - zk.dot(zc)) / (zc - zk).norm();
}

}  // namespace specguard
