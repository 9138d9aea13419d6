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

#include "specguard/geometry.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "specguard/spectral.hpp"

namespace specguard {

namespace {

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return svd_top(m).sigma;
}

void check_classes(const Net& net, int c, int k) {
  if (c < 0 || c >= net.classes() || k < 0 || k >= net.classes()) {
    throw std::invalid_argument("class index out of range");
  }
  if (c == k) throw std::invalid_argument("comparison class must differ from c");
}

Eigen::VectorXd sample_in_ball(Rng& rng, const Eigen::VectorXd& center, double radius) {
  const Index n = center.size();
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
  return center + r * random_unit_vector(rng, n);
}

}  // namespace

MetricTensor metric_tensor(const Net& net, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd jac = input_jacobian_feature(net, x);
  MetricTensor m;
  m.g = jac.transpose() * jac;
  // Exact symmetry; the product is symmetric only up to rounding.
  m.g = 0.5 * (m.g + m.g.transpose()).eval();
  m.x = x;
  return m;
}

double lambda_max(const MetricTensor& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.g, Eigen::EigenvaluesOnly);
  return std::max(es.eigenvalues().maxCoeff(), 0.0);
}

double volume_element(const MetricTensor& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.g, Eigen::EigenvaluesOnly);
  double det = 1.0;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    double ev = es.eigenvalues()[i];
    if (ev < 0.0) {
      if (ev < -1e-12) throw NumericError("metric tensor is not positive semidefinite");
      ev = 0.0;
    }
    det *= ev;
  }
  return std::sqrt(det);
}

Eigen::MatrixXd volume_element_grid(const Net& net, const Rect& rect, Index res_x,
                                    Index res_y) {
  if (net.input_dim != 2) throw std::invalid_argument("volume_element_grid needs input_dim == 2");
  if (res_x < 1 || res_y < 1) throw std::invalid_argument("grid resolution must be positive");
  Eigen::MatrixXd grid(res_y, res_x);
  const double dx = (rect.x_max - rect.x_min) / static_cast<double>(res_x);
  const double dy = (rect.y_max - rect.y_min) / static_cast<double>(res_y);
  for (Index i = 0; i < res_y; ++i) {
    for (Index j = 0; j < res_x; ++j) {
      const Eigen::Vector2d x(rect.x_min + (static_cast<double>(j) + 0.5) * dx,
                              rect.y_min + (static_cast<double>(i) + 0.5) * dy);
      grid(i, j) = volume_element(metric_tensor(net, x));
    }
  }
  return grid;
}

int runner_up(const Eigen::Ref<const Eigen::VectorXd>& logits, int c) {
  if (logits.size() < 2) throw std::invalid_argument("runner_up needs at least two classes");
  int best = -1;
  for (Index i = 0; i < logits.size(); ++i) {
    if (i == c) continue;
    if (best < 0 || logits[i] > logits[best]) best = static_cast<int>(i);
  }
  return best;
}

double theta_x(const Net& net, const Eigen::VectorXd& x, int c, int k) {
  check_classes(net, c, k);
  const Eigen::VectorXd phi = feature_map(net, x);
  const Eigen::VectorXd dw = (net.readout.weight.row(c) - net.readout.weight.row(k)).transpose();
  const double denom = dw.norm() * phi.norm();
  if (!(denom > 0.0)) throw std::domain_error("theta_x undefined: zero feature or readout difference");
  return std::clamp(dw.dot(phi) / denom, -1.0, 1.0);
}

std::string to_string(BoundMode mode) {
  switch (mode) {
    case BoundMode::local:
      return "local";
    case BoundMode::ball:
      return "ball";
    case BoundMode::certified:
      return "certified";
  }
  return "local";
}

BoundMode parse_bound_mode(std::string_view name) {
  if (name == "local") return BoundMode::local;
  if (name == "ball") return BoundMode::ball;
  if (name == "certified") return BoundMode::certified;
  throw std::invalid_argument("unknown bound mode: " + std::string(name));
}

double feature_lipschitz_bound(const Net& net) {
  double bound = 1.0;
  for (const Layer& layer : net.features) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      bound *= spectral_norm(d->weight);
    } else if (const auto* cv = std::get_if<ConvLayer>(&layer)) {
      double s2;
      if (cv->spec.stride_divides()) {
        s2 = conv_top_sigma2(kernel_array(cv->spec, cv->weight), cv->spec.h, cv->spec.w,
                             cv->spec.stride);
      } else {
        s2 = std::pow(svd_top(conv_linearize(kernel_array(cv->spec, cv->weight), cv->spec.h,
                                             cv->spec.w, cv->spec.stride))
                          .sigma,
                      2);
      }
      bound *= std::sqrt(s2);
    } else {
      bound *= max_abs_derivative(std::get<ActivationLayer>(layer).fn);
    }
  }
  return bound;
}

double adv_lower_bound(const Net& net, const Eigen::VectorXd& x, int c, int k,
                       BoundMode mode, double radius, Index samples, Rng* rng) {
  check_classes(net, c, k);
  const ForwardResult fr = forward(net, x);
  if (argmax(fr.logits) != c) throw std::invalid_argument("adv_lower_bound: x is not classified as c");

  const Eigen::VectorXd dw = (net.readout.weight.row(c) - net.readout.weight.row(k)).transpose();
  const double dw_norm = dw.norm();
  if (!(dw_norm > 0.0)) throw std::domain_error("adv_lower_bound: W_c equals W_k");
  double numerator = dw.dot(fr.cache.features.col(0));
  if (net.readout.has_bias()) numerator += net.readout.bias[c] - net.readout.bias[k];
  numerator /= dw_norm;
  if (!(numerator > 0.0)) return 0.0;

  double denominator = 0.0;
  switch (mode) {
    case BoundMode::local:
      denominator = spectral_norm(input_jacobian_feature(net, x));
      break;
    case BoundMode::ball: {
      if (!(radius > 0.0)) throw std::invalid_argument("ball bound needs radius > 0");
      if (samples < 0) throw std::invalid_argument("ball bound needs samples >= 0");
      if (rng == nullptr) throw std::invalid_argument("ball bound needs an rng");
      denominator = spectral_norm(input_jacobian_feature(net, x));
      for (Index s = 0; s < samples; ++s) {
        denominator = std::max(
            denominator, spectral_norm(input_jacobian_feature(net, sample_in_ball(*rng, x, radius))));
      }
      break;
    }
    case BoundMode::certified:
      denominator = feature_lipschitz_bound(net);
      break;
  }
  if (!(denominator > 0.0)) return std::numeric_limits<double>::infinity();
  return numerator / denominator;
}

double certified_radius(const Net& net, const Eigen::VectorXd& x, int c) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < net.classes(); ++k) {
    if (k == c) continue;
    best = std::min(best, adv_lower_bound(net, x, c, k, BoundMode::certified));
  }
  return best;
}

GeometryReport geometry_report(const Net& net, const Eigen::VectorXd& x, int c,
                               std::optional<int> k, const GeometryOptions& opts,
                               Rng& rng) {
  GeometryReport r;
  r.c = c;
  r.k = k ? *k : runner_up(forward(net, x).logits, c);
  r.theta_x = theta_x(net, x, c, r.k);
  r.feat_norm = feature_map(net, x).norm();
  r.lambda_max_g = lambda_max(metric_tensor(net, x));
  r.bound_local = adv_lower_bound(net, x, c, r.k, BoundMode::local);
  if (opts.radius > 0.0) {
    r.bound_ball = adv_lower_bound(net, x, c, r.k, BoundMode::ball, opts.radius, opts.samples, &rng);
  }
  r.bound_certified = adv_lower_bound(net, x, c, r.k, BoundMode::certified);
  return r;
}

}  // namespace specguard
