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

#include "specguard/train.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <ostream>

#include "specguard/geometry.hpp"

namespace specguard {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool net_finite(const Net& net) {
  for (const Layer& layer : net.features) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      if (!d->weight.allFinite() || !d->bias.allFinite()) return false;
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      if (!c->weight.allFinite() || !c->bias.allFinite()) return false;
    }
  }
  return net.readout.weight.allFinite() && net.readout.bias.allFinite();
}

EpochRecord snapshot_record(const Net& net, const TrainConfig& cfg, const Dataset& train,
                            const Dataset* test, int epoch) {
  EpochRecord r;
  r.epoch = epoch;
  r.test_acc = test ? accuracy(net, *test) : kNaN;
  if (cfg.log_sigma2) r.sigma2 = weight_layer_sigma2(net);
  if (!cfg.track_samples.empty()) {
    const Dataset tracked = train.select(cfg.track_samples);
    r.tracked = track_confidence(net, tracked.inputs, tracked.labels);
    for (size_t i = 0; i < r.tracked.size(); ++i) r.tracked[i].sample = cfg.track_samples[i];
  }
  return r;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("train.epochs must be >= 0");
  if (batch_size < 0) throw std::invalid_argument("train.batch_size must be >= 0");
  if (!(lr > 0.0)) throw std::invalid_argument("train.lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("train.momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("train.weight_decay must be >= 0");
  reg.validate(epochs);
}

void TrainLog::write_csv(std::ostream& out) const {
  const EpochRecord& head = epochs.empty() ? initial : epochs.front();
  out << "epoch,loss,penalty,train_acc,test_acc";
  for (size_t l = 0; l < head.sigma2.size(); ++l) out << ",sigma2_" << l;
  for (const ConfidencePoint& p : head.tracked) {
    out << ",theta_" << p.sample << ",featnorm_" << p.sample;
  }
  out << '\n';
  auto row = [&](const EpochRecord& r) {
    out << r.epoch << ',' << fmt(r.loss) << ',' << fmt(r.penalty) << ',' << fmt(r.train_acc)
        << ',' << fmt(r.test_acc);
    for (double s : r.sigma2) out << ',' << fmt(s);
    for (const ConfidencePoint& p : r.tracked) out << ',' << fmt(p.theta) << ',' << fmt(p.feat_norm);
    out << '\n';
  };
  row(initial);
  for (const EpochRecord& r : epochs) row(r);
}

void sgd_step(Net& net, const Gradients& grads, Gradients& velocity, double lr,
              double momentum, double weight_decay) {
  for (size_t l = 0; l < net.features.size(); ++l) {
    ParamGrad& v = velocity.features[l];
    const ParamGrad& g = grads.features[l];
    if (auto* d = std::get_if<DenseLayer>(&net.features[l])) {
      sgd_step(d->weight, g.weight, v.weight, lr, momentum, weight_decay);
      if (d->has_bias()) sgd_step(d->bias, g.bias, v.bias, lr, momentum, weight_decay);
    } else if (auto* c = std::get_if<ConvLayer>(&net.features[l])) {
      sgd_step(c->weight, g.weight, v.weight, lr, momentum, weight_decay);
      if (c->has_bias()) sgd_step(c->bias, g.bias, v.bias, lr, momentum, weight_decay);
    }
  }
  sgd_step(net.readout.weight, grads.readout.weight, velocity.readout.weight, lr, momentum,
           weight_decay);
  if (net.readout.has_bias()) {
    sgd_step(net.readout.bias, grads.readout.bias, velocity.readout.bias, lr, momentum,
             weight_decay);
  }
}

double accuracy(const Net& net, const Dataset& ds) {
  if (ds.size() == 0) return kNaN;
  const std::vector<int> pred = predict_batch(net, ds.inputs);
  Index hits = 0;
  for (size_t i = 0; i < pred.size(); ++i) hits += pred[i] == ds.labels[i];
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

std::vector<ConfidencePoint> track_confidence(const Net& net, const Eigen::MatrixXd& inputs,
                                              const std::vector<int>& labels) {
  if (static_cast<Index>(labels.size()) != inputs.cols()) {
    throw std::invalid_argument("track_confidence: label count mismatch");
  }
  const ForwardCache cache = forward_batch(net, inputs);
  std::vector<ConfidencePoint> out;
  for (Index j = 0; j < inputs.cols(); ++j) {
    ConfidencePoint p;
    p.sample = j;
    p.c = labels[static_cast<size_t>(j)];
    p.k = runner_up(cache.logits.col(j), p.c);
    p.feat_norm = cache.features.col(j).norm();
    const Eigen::VectorXd dw =
        (net.readout.weight.row(p.c) - net.readout.weight.row(p.k)).transpose();
    const double denom = dw.norm() * p.feat_norm;
    p.theta = denom > 0.0 ? dw.dot(cache.features.col(j)) / denom : kNaN;
    out.push_back(p);
  }
  return out;
}

TrainLog train_supervised(Net& net, const Dataset& train, const TrainConfig& cfg,
                          const Dataset* test) {
  cfg.validate();
  net.validate();
  train.validate();
  if (train.dim() != net.input_dim) throw std::invalid_argument("train: input dimension mismatch");
  if (train.classes > net.classes()) throw std::invalid_argument("train: more classes than logits");
  if (train.size() == 0) throw std::invalid_argument("train: empty dataset");

  Rng shuffle_rng(cfg.seed, 1);
  Rng spectral_rng(cfg.seed, 2);
  SpectralState state = SpectralState::init(net, cfg.reg, spectral_rng);
  Gradients velocity = Gradients::zeros_like(net);

  TrainLog log;
  log.initial = snapshot_record(net, cfg, train, test, 0);
  {
    const Eigen::MatrixXd logits = forward_batch(net, train.inputs).logits;
    log.initial.loss = softmax_cross_entropy(logits, train.labels).loss;
    log.initial.train_acc = accuracy(net, train);
  }

  const Index m = train.size();
  const bool full_batch = cfg.batch_size == 0 || cfg.batch_size >= m;
  const Index batch = full_batch ? m : cfg.batch_size;
  const bool use_penalty = cfg.reg.mode != RegMode::none && cfg.reg.gamma > 0.0;
  long step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (epoch == cfg.reg.burn_in_epoch) log.burn_in_snapshot = net;

    std::vector<Index> order;
    if (!full_batch) order = permutation(m, shuffle_rng);

    double loss_sum = 0.0;
    double penalty_value = 0.0;
    Index hits = 0;
    Index batches = 0;
    for (Index start = 0; start < m; start += batch) {
      const Index count = std::min(batch, m - start);
      Eigen::MatrixXd xb;
      std::vector<int> yb;
      if (full_batch) {
        xb = train.inputs;
        yb = train.labels;
      } else {
        xb.resize(train.dim(), count);
        yb.resize(static_cast<size_t>(count));
        for (Index j = 0; j < count; ++j) {
          const Index i = order[static_cast<size_t>(start + j)];
          xb.col(j) = train.inputs.col(i);
          yb[static_cast<size_t>(j)] = train.labels[static_cast<size_t>(i)];
        }
      }

      const ForwardCache cache = forward_batch(net, xb);
      const LossAndGrad lg = softmax_cross_entropy(cache.logits, yb);
      if (!std::isfinite(lg.loss)) {
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch + 1) +
                                  ", step " + std::to_string(step),
                              epoch + 1, step, net);
      }
      for (Index j = 0; j < count; ++j) hits += argmax(cache.logits.col(j)) == yb[static_cast<size_t>(j)];
      loss_sum += lg.loss;
      ++batches;

      Gradients grads = backward(net, cache, lg.dlogits);
      if (cfg.reg.warming(epoch)) refresh(state, net, cfg.reg);
      if (use_penalty && cfg.reg.active(epoch)) grads += penalty_grads(net, cfg.reg, state);
      sgd_step(net, grads, velocity, cfg.lr, cfg.momentum, cfg.weight_decay);
      ++step;
      if (!net_finite(net)) {
        throw DivergenceError("non-finite weights after step " + std::to_string(step), epoch + 1,
                              step, net);
      }
    }
    if (use_penalty && cfg.reg.active(epoch)) penalty_value = penalty(net, cfg.reg, state);

    EpochRecord rec = snapshot_record(net, cfg, train, test, epoch + 1);
    rec.loss = loss_sum / static_cast<double>(batches);
    rec.penalty = penalty_value;
    rec.train_acc = static_cast<double>(hits) / static_cast<double>(m);
    log.epochs.push_back(std::move(rec));
  }
  if (cfg.reg.burn_in_epoch == cfg.epochs) log.burn_in_snapshot = net;
  return log;
}

// --- Readout retraining ------------------------------------------------------

double readout_objective(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                         const Eigen::MatrixXd& w, const Eigen::VectorXd& b, double l2,
                         Eigen::MatrixXd* grad_w, Eigen::VectorXd* grad_b) {
  Eigen::MatrixXd logits = w * features;
  logits.colwise() += b;
  double total = 0.0;
  Eigen::MatrixXd resid(logits.rows(), logits.cols());
  for (Index j = 0; j < logits.cols(); ++j) {
    const double mx = logits.col(j).maxCoeff();
    const Eigen::ArrayXd e = (logits.col(j).array() - mx).exp();
    const double s = e.sum();
    const int y = labels[static_cast<size_t>(j)];
    total += std::log(s) + mx - logits(y, j);
    resid.col(j) = e / s;
    resid(y, j) -= 1.0;
  }
  total += 0.5 * l2 * w.squaredNorm();
  if (grad_w) *grad_w = resid * features.transpose() + l2 * w;
  if (grad_b) *grad_b = resid.rowwise().sum();
  return total;
}

ReadoutFit retrain_readout(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                           int classes, double l2, const ReadoutFitOptions& opts) {
  if (static_cast<Index>(labels.size()) != features.cols()) {
    throw std::invalid_argument("retrain_readout: label count mismatch");
  }
  if (classes < 2) throw std::invalid_argument("retrain_readout: need at least two classes");
  if (!(l2 > 0.0)) throw std::invalid_argument("retrain_readout: l2 must be > 0");
  for (int y : labels)
    if (y < 0 || y >= classes) throw std::invalid_argument("retrain_readout: label out of range");

  const Index d = features.rows();
  const Index nw = classes * d;
  const Index n = nw + classes;

  auto unpack = [&](const Eigen::VectorXd& x, Eigen::MatrixXd& w, Eigen::VectorXd& b) {
    w = Eigen::Map<const Eigen::MatrixXd>(x.data(), classes, d);
    b = x.tail(classes);
  };
  auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    Eigen::MatrixXd w, gw;
    Eigen::VectorXd b, gb;
    unpack(x, w, b);
    const double f = readout_objective(features, labels, w, b, l2, &gw, &gb);
    g.resize(n);
    g.head(nw) = Eigen::Map<const Eigen::VectorXd>(gw.data(), nw);
    g.tail(classes) = gb;
    return f;
  };

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g;
  double f = eval(x, g);
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> memory;  // (s, y)

  ReadoutFit fit;
  int iter = 0;
  int failures = 0;
  while (iter < opts.max_iters && g.norm() > opts.grad_tol) {
    // Two-loop recursion.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(memory.size());
    for (size_t i = memory.size(); i-- > 0;) {
      const auto& [s, y] = memory[i];
      alpha[i] = s.dot(q) / y.dot(s);
      q -= alpha[i] * y;
    }
    double gamma0 = 1.0 / std::max(1.0, g.norm());
    if (!memory.empty()) gamma0 = memory.back().first.dot(memory.back().second) / memory.back().second.squaredNorm();
    Eigen::VectorXd dir = gamma0 * q;
    for (size_t i = 0; i < memory.size(); ++i) {
      const auto& [s, y] = memory[i];
      const double beta = y.dot(dir) / y.dot(s);
      dir += (alpha[i] - beta) * s;
    }
    dir = -dir;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      memory.clear();
      dir = -g;
      slope = -g.squaredNorm();
    }

    // Backtracking with an approximate-Wolfe fallback for when objective
    // differences fall below rounding.
    double step = 1.0;
    Eigen::VectorXd x_new, g_new;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * dir;
      f_new = eval(x_new, g_new);
      const double slope_new = g_new.dot(dir);
      const bool armijo = f_new <= f + 1e-4 * step * slope;
      const bool approx_wolfe = f_new <= f + 1e-10 * std::abs(f) &&
                                slope_new >= 0.9 * slope && slope_new <= -0.8 * slope;
      if (std::isfinite(f_new) && (armijo || approx_wolfe)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++iter;
    if (!accepted) {
      if (++failures > 2) break;
      memory.clear();
      continue;
    }
    failures = 0;
    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd y = g_new - g;
    if (s.dot(y) > 1e-16 * s.norm() * y.norm()) {
      memory.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(memory.size()) > opts.memory) memory.pop_front();
    }
    x = std::move(x_new);
    g = std::move(g_new);
    f = f_new;
  }

  Eigen::MatrixXd w;
  Eigen::VectorXd b;
  unpack(x, w, b);
  fit.readout.weight = w;
  fit.readout.bias = b;
  fit.objective = f;
  fit.grad_norm = g.norm();
  fit.iterations = iter;
  fit.converged = fit.grad_norm <= opts.grad_tol;
  return fit;
}

}  // namespace specguard
