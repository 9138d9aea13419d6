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

#include "specguard/regularize.hpp"

#include <cmath>

namespace specguard {

namespace {

void power_round(LayerSpectrum& entry, const Net& net, int iterations) {
  entry.triple = power_iter_sigma2(layer_operator(net, entry.position), entry.triple.v, iterations);
}

}  // namespace

std::string to_string(RegMode mode) {
  switch (mode) {
    case RegMode::none:
      return "none";
    case RegMode::rep_spectral:
      return "rep-spectral";
    case RegMode::ll_spectral:
      return "ll-spectral";
  }
  return "none";
}

RegMode parse_reg_mode(std::string_view name) {
  if (name == "none") return RegMode::none;
  if (name == "rep-spectral") return RegMode::rep_spectral;
  if (name == "ll-spectral") return RegMode::ll_spectral;
  throw std::invalid_argument("unknown regularization mode: " + std::string(name));
}

void RegConfig::validate(int total_epochs) const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("reg.gamma must be >= 0");
  if (refresh_period < 1) throw std::invalid_argument("reg.refresh_period must be >= 1");
  if (iters_per_refresh < 1) throw std::invalid_argument("reg.iters must be >= 1");
  if (burn_in_epoch < 0) throw std::invalid_argument("reg.burn_in must be >= 0");
  if (total_epochs >= 0 && burn_in_epoch > total_epochs) {
    throw std::invalid_argument("reg.burn_in exceeds the number of epochs");
  }
}

bool RegConfig::warming(int epoch) const {
  if (mode == RegMode::none) return false;
  const int lead = (burn_in_epoch + 9) / 10;
  return epoch >= burn_in_epoch - lead;
}

SpectralState SpectralState::init(const Net& net, const RegConfig& cfg, Rng& rng) {
  SpectralState state;
  if (cfg.mode == RegMode::none) return state;
  std::vector<size_t> positions = net.weight_layer_positions();
  if (cfg.mode == RegMode::ll_spectral) positions.push_back(kReadoutLayer);
  for (size_t pos : positions) {
    const LinearOperator<double> op = layer_operator(net, pos);
    LayerSpectrum entry;
    entry.position = pos;
    entry.triple.v = random_unit_vector(rng, op.cols);
    entry.triple.u = Eigen::VectorXd::Zero(op.rows);
    entry.triple.age = cfg.refresh_period - 1;
    state.layers.push_back(std::move(entry));
  }
  return state;
}

LinearOperator<double> layer_operator(const Net& net, size_t position) {
  if (position == kReadoutLayer) return dense_operator(net.readout.weight);
  const Layer& layer = net.features.at(position);
  if (const auto* d = std::get_if<DenseLayer>(&layer)) return dense_operator(d->weight);
  if (const auto* c = std::get_if<ConvLayer>(&layer)) return conv_operator(c->spec, c->weight);
  throw std::invalid_argument("layer_operator: activation layers have no weights");
}

double penalty(const Net& net, const RegConfig& cfg, const SpectralState& state) {
  if (cfg.mode == RegMode::none || cfg.gamma == 0.0) return 0.0;
  double sum = 0.0;
  for (const LayerSpectrum& entry : state.layers) {
    sum += layer_operator(net, entry.position).apply(entry.triple.v).squaredNorm();
  }
  return 0.5 * cfg.gamma * sum;
}

Gradients penalty_grads(const Net& net, const RegConfig& cfg, SpectralState& state) {
  Gradients g = Gradients::zeros_like(net);
  if (cfg.mode == RegMode::none || cfg.gamma == 0.0) return g;
  for (LayerSpectrum& entry : state.layers) {
    if (entry.triple.age > cfg.refresh_period) {
      power_round(entry, net, cfg.iters_per_refresh);
      entry.triple.age = 0;
    }
    const Eigen::VectorXd& v = entry.triple.v;
    if (entry.position == kReadoutLayer) {
      g.readout.weight = cfg.gamma * (net.readout.weight * v) * v.transpose();
      continue;
    }
    const Layer& layer = net.features[entry.position];
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      g.features[entry.position].weight = cfg.gamma * (d->weight * v) * v.transpose();
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      const Eigen::VectorXd wv = conv_apply(c->spec, c->weight, v);
      g.features[entry.position].weight = cfg.gamma * conv_kernel_grad(c->spec, wv, v);
    }
  }
  return g;
}

void refresh(SpectralState& state, const Net& net, const RegConfig& cfg) {
  for (LayerSpectrum& entry : state.layers) {
    entry.triple.age += 1;
    if (entry.triple.age >= cfg.refresh_period) {
      power_round(entry, net, cfg.iters_per_refresh);
      entry.triple.age = 0;
    }
  }
}

void converge(SpectralState& state, const Net& net, int iterations) {
  for (LayerSpectrum& entry : state.layers) {
    power_round(entry, net, iterations);
    entry.triple.age = 0;
  }
}

std::vector<double> weight_layer_sigma2(const Net& net) {
  std::vector<double> out;
  for (const Layer& layer : net.features) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      out.push_back(std::pow(svd_top(d->weight).sigma, 2));
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      if (c->spec.stride_divides()) {
        out.push_back(conv_top_sigma2(kernel_array(c->spec, c->weight), c->spec.h,
                                      c->spec.w, c->spec.stride));
      } else {
        Rng rng(0);
        const auto t = power_iter_sigma2(conv_operator(c->spec, c->weight),
                                         random_unit_vector(rng, c->spec.in_size()), 500);
        out.push_back(t.sigma2);
      }
    }
  }
  out.push_back(std::pow(svd_top(net.readout.weight).sigma, 2));
  return out;
}

}  // namespace specguard
