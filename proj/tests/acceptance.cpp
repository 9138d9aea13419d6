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

// Acceptance checks. Each criterion prints one PASS/FAIL line followed by
// indented detail lines; the exit status is nonzero when any selected
// criterion fails.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "specguard/attack.hpp"
#include "specguard/etf.hpp"
#include "specguard/geometry.hpp"
#include "specguard/regularize.hpp"
#include "specguard/spectral.hpp"
#include "specguard/train.hpp"

using namespace specguard;

namespace {

struct Outcome {
  bool pass = false;
  std::vector<std::string> details;

  void note(const char* format, ...) __attribute__((format(printf, 2, 3))) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    details.emplace_back(buf);
  }
};

std::string g_data_dir;

// --- shared helpers ----------------------------------------------------------

Dataset clean_xor() {
  Rng rng(0);
  return xor_dataset(false, 1, 0.0, rng);
}

InitOptions small_gaussian() {
  InitOptions init;
  init.scheme = InitOptions::Scheme::gaussian;
  init.std = 0.01;
  return init;
}

TrainConfig xor_protocol(RegMode mode, double weight_decay, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = 15000;
  cfg.lr = 1.0;
  cfg.momentum = 0.9;
  cfg.weight_decay = weight_decay;
  cfg.seed = seed;
  cfg.reg.mode = mode;
  cfg.reg.gamma = 1e-4;
  cfg.reg.burn_in_epoch = 10500;
  cfg.log_sigma2 = false;
  return cfg;
}

Net train_xor(RegMode mode, double weight_decay, std::uint64_t seed) {
  Rng init(seed);
  Net net = make_mlp(2, {8}, 2, Activation::gelu, true, small_gaussian(), init);
  train_supervised(net, clean_xor(), xor_protocol(mode, weight_decay, seed));
  return net;
}

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-300});
}

Eigen::MatrixXd fd_gradient(const std::function<double(const Eigen::MatrixXd&)>& f,
                            Eigen::MatrixXd at, double h = 1e-4) {
  Eigen::MatrixXd g(at.rows(), at.cols());
  for (Index j = 0; j < at.cols(); ++j) {
    for (Index i = 0; i < at.rows(); ++i) {
      const double keep = at(i, j);
      at(i, j) = keep + h;
      const double up = f(at);
      at(i, j) = keep - h;
      const double down = f(at);
      at(i, j) = keep;
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

// Every trainable matrix of a net, in a fixed order, with its gradient slot.
std::vector<std::pair<Eigen::MatrixXd*, const Eigen::MatrixXd*>> param_slots(
    Net& net, const Gradients& g, std::vector<Eigen::MatrixXd>& bias_store,
    std::vector<Eigen::MatrixXd>& bias_grads) {
  std::vector<std::pair<Eigen::MatrixXd*, const Eigen::MatrixXd*>> out;
  for (size_t l = 0; l < net.features.size(); ++l) {
    if (auto* d = std::get_if<DenseLayer>(&net.features[l])) {
      out.emplace_back(&d->weight, &g.features[l].weight);
    } else if (auto* c = std::get_if<ConvLayer>(&net.features[l])) {
      out.emplace_back(&c->weight, &g.features[l].weight);
    }
  }
  out.emplace_back(&net.readout.weight, &g.readout.weight);
  (void)bias_store;
  (void)bias_grads;
  return out;
}

std::vector<Eigen::VectorXd*> bias_slots(Net& net) {
  std::vector<Eigen::VectorXd*> out;
  for (Layer& layer : net.features) {
    if (auto* d = std::get_if<DenseLayer>(&layer); d && d->has_bias()) out.push_back(&d->bias);
    if (auto* c = std::get_if<ConvLayer>(&layer); c && c->has_bias()) out.push_back(&c->bias);
  }
  if (net.readout.has_bias()) out.push_back(&net.readout.bias);
  return out;
}

std::vector<const Eigen::VectorXd*> bias_grad_slots(const Net& net, const Gradients& g) {
  std::vector<const Eigen::VectorXd*> out;
  for (size_t l = 0; l < net.features.size(); ++l) {
    const Layer& layer = net.features[l];
    if (const auto* d = std::get_if<DenseLayer>(&layer); d && d->has_bias()) out.push_back(&g.features[l].bias);
    if (const auto* c = std::get_if<ConvLayer>(&layer); c && c->has_bias()) out.push_back(&g.features[l].bias);
  }
  if (net.readout.has_bias()) out.push_back(&g.readout.bias);
  return out;
}

Net small_convnet(Rng& rng) {
  Net net;
  ConvLayer c;
  c.spec = ConvSpec{2, 2, 3, 1, 4, 4};
  c.weight = gaussian_matrix(rng, 2, c.spec.kernel_cols(), 0.0, 0.4);
  c.bias = gaussian_vector(rng, 2, 0.0, 0.3);
  net.input_dim = c.spec.in_size();
  net.features.emplace_back(c);
  net.features.emplace_back(ActivationLayer{Activation::tanh});
  DenseLayer d;
  d.weight = gaussian_matrix(rng, 6, c.spec.out_size(), 0.0, 0.3);
  d.bias = gaussian_vector(rng, 6, 0.0, 0.3);
  net.features.emplace_back(d);
  net.features.emplace_back(ActivationLayer{Activation::gelu});
  net.readout.weight = gaussian_matrix(rng, 3, 6, 0.0, 0.5);
  net.readout.bias = gaussian_vector(rng, 3, 0.0, 0.3);
  net.validate();
  return net;
}

// --- criteria -----------------------------------------------------------------

Outcome criterion1() {
  Outcome out;
  Rng rng(101);
  int ok = 0;
  double worst = 0.0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const Index c_in = 1 + static_cast<Index>(rng.uniform_index(3));
    const Index c_out = 1 + static_cast<Index>(rng.uniform_index(3));
    const Index k = 1 + static_cast<Index>(rng.uniform_index(3));
    const Index hw = std::vector<Index>{4, 6, 8}[rng.uniform_index(3)];
    const Index stride = 1 + static_cast<Index>(rng.uniform_index(2));
    const Array<double> kernel = gaussian(rng, {c_out, c_in, k, k}, 0.0, 1.0);
    const double fft = conv_top_sigma2(kernel, hw, hw, stride);
    const double exact = std::pow(svd_top(conv_linearize(kernel, hw, hw, stride)).sigma, 2);
    const double err = std::abs(fft - exact) / exact;
    worst = std::max(worst, err);
    ok += err <= 1e-8;
  }
  out.pass = ok == trials;
  out.note("%d/%d kernels within 1e-8 relative; worst %.3g", ok, trials, worst);
  return out;
}

Outcome criterion2() {
  Outcome out;
  Rng rng(202);
  const int trials = 20;
  int cold_ok = 0, warm_ok = 0;
  int worst_iters = 0;
  double worst_warm = 0.0;
  for (int t = 0; t < trials; ++t) {
    // Random Gaussian matrix with the top singular value lifted to a 10% gap.
    const Eigen::MatrixXd g = gaussian_matrix(rng, 64, 64, 0.0, 1.0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::VectorXd s = svd.singularValues();
    s[0] = std::max(s[0], s[1] / 0.9);
    const Eigen::MatrixXd w = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    const double exact = s[0] * s[0];

    SingularTriple<double> tr;
    tr.v = random_unit_vector(rng, 64);
    int iters = 0;
    while (iters < 200) {
      tr = power_iter_sigma2(dense_operator(w), tr.v, 1);
      ++iters;
      if (std::abs(tr.sigma2 - exact) <= 1e-6 * exact) break;
    }
    worst_iters = std::max(worst_iters, iters);
    cold_ok += std::abs(tr.sigma2 - exact) <= 1e-6 * exact;

    Eigen::MatrixXd dw = gaussian_matrix(rng, 64, 64, 0.0, 1.0);
    dw *= 1e-3 * s[0] / svd_top(dw).sigma;
    const Eigen::MatrixXd w2 = w + dw;
    const double exact2 = std::pow(svd_top(w2).sigma, 2);
    const SingularTriple<double> warm = power_iter_sigma2(dense_operator(w2), tr.v, 3);
    const double err = std::abs(warm.sigma2 - exact2) / exact2;
    worst_warm = std::max(worst_warm, err);
    warm_ok += err <= 1e-6;
  }
  out.pass = cold_ok == trials && warm_ok == trials;
  out.note("cold start: %d/%d within 1e-6 in <= 200 iterations (max %d used)", cold_ok, trials,
           worst_iters);
  out.note("warm start after |dW| = 1e-3 |W|: %d/%d within 1e-6 in 3 iterations (worst %.3g)",
           warm_ok, trials, worst_warm);
  return out;
}

Outcome criterion3() {
  Outcome out;
  Rng rng(303);
  double worst_dense = 0.0, worst_conv = 0.0, worst_bp = 0.0, worst_reg = 0.0;

  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd w = gaussian_matrix(rng, 2 + t % 5, 2 + (t * 3) % 5, 0.0, 1.0);
    const Eigen::MatrixXd g = sigma2_grad(w, top_triple(w)).grad;
    const Eigen::MatrixXd fd =
        fd_gradient([](const Eigen::MatrixXd& m) { return std::pow(svd_top(m).sigma, 2); }, w);
    worst_dense = std::max(worst_dense, rel_err(g, fd));
  }

  for (int t = 0; t < 10; ++t) {
    const Index stride = 1 + t % 2;
    ConvSpec spec{1 + t % 3, 1 + (t / 3) % 2, 2 + t % 2, stride, 4, 4};
    const KernelMatrix k = gaussian_matrix(rng, spec.c_out, spec.kernel_cols(), 0.0, 1.0);
    // Exact triple; some random kernels have gaps too small for power iteration.
    const SingularTriple<double> tr =
        top_triple(conv_linearize(kernel_array(spec, k), spec.h, spec.w, spec.stride));
    const KernelMatrix g = conv_sigma2_grad(spec, tr);
    const Eigen::MatrixXd fd = fd_gradient(
        [&](const Eigen::MatrixXd& m) {
          return conv_top_sigma2(kernel_array(spec, m), spec.h, spec.w, spec.stride);
        },
        k);
    worst_conv = std::max(worst_conv, rel_err(g, fd));
  }

  auto check_backprop = [&](Net net, const Eigen::MatrixXd& x, const std::vector<int>& y) {
    auto loss = [&](const Net& n) { return softmax_cross_entropy(forward_batch(n, x).logits, y).loss; };
    const ForwardCache cache = forward_batch(net, x);
    const Gradients g = backward(net, cache, softmax_cross_entropy(cache.logits, y).dlogits);
    std::vector<Eigen::MatrixXd> unused_a, unused_b;
    for (auto [param, grad] : param_slots(net, g, unused_a, unused_b)) {
      const Eigen::MatrixXd keep = *param;
      const Eigen::MatrixXd fd = fd_gradient(
          [&](const Eigen::MatrixXd& m) {
            *param = m;
            return loss(net);
          },
          keep);
      *param = keep;
      worst_bp = std::max(worst_bp, rel_err(*grad, fd));
    }
    const auto biases = bias_slots(net);
    const auto bgrads = bias_grad_slots(net, g);
    for (size_t i = 0; i < biases.size(); ++i) {
      const Eigen::VectorXd keep = *biases[i];
      const Eigen::MatrixXd fd = fd_gradient(
          [&](const Eigen::MatrixXd& m) {
            *biases[i] = m.col(0);
            return loss(net);
          },
          keep);
      *biases[i] = keep;
      worst_bp = std::max(worst_bp, rel_err(*bgrads[i], fd));
    }
  };
  for (int t = 0; t < 5; ++t) {
    Net mlp = make_mlp(4, {6, 5}, 3, t % 2 ? Activation::tanh : Activation::gelu, true, {}, rng);
    for (Eigen::VectorXd* b : bias_slots(mlp)) *b = gaussian_vector(rng, b->size(), 0.0, 0.3);
    check_backprop(mlp, gaussian_matrix(rng, 4, 7, 0.0, 1.0), {0, 1, 2, 0, 1, 2, 0});
    const Net conv = small_convnet(rng);
    check_backprop(conv, gaussian_matrix(rng, conv.input_dim, 4, 0.0, 1.0), {0, 1, 2, 1});
  }

  for (int t = 0; t < 5; ++t) {
    Net net = t % 2 ? small_convnet(rng) : make_mlp(4, {6, 5}, 3, Activation::tanh, true, {}, rng);
    const double gamma = 0.7;
    RegConfig cfg;
    cfg.mode = RegMode::ll_spectral;
    cfg.gamma = gamma;
    SpectralState st = SpectralState::init(net, cfg, rng);
    converge(st, net, 5000);
    const Gradients g = penalty_grads(net, cfg, st);
    auto exact_penalty = [&](const Net& n) {
      double sum = 0.0;
      for (double s2 : weight_layer_sigma2(n)) sum += s2;
      return 0.5 * gamma * sum;
    };
    std::vector<Eigen::MatrixXd> unused_a, unused_b;
    for (auto [param, grad] : param_slots(net, g, unused_a, unused_b)) {
      const Eigen::MatrixXd keep = *param;
      const Eigen::MatrixXd fd = fd_gradient(
          [&](const Eigen::MatrixXd& m) {
            *param = m;
            return exact_penalty(net);
          },
          keep);
      *param = keep;
      worst_reg = std::max(worst_reg, rel_err(*grad, fd));
    }
  }

  out.pass = worst_dense <= 1e-4 && worst_conv <= 1e-4 && worst_bp <= 1e-4 && worst_reg <= 1e-4;
  out.note("dense sigma^2 gradient: worst relative error %.3g", worst_dense);
  out.note("conv operator sigma^2 gradient: worst relative error %.3g", worst_conv);
  out.note("backprop (MLP and conv net): worst relative error %.3g", worst_bp);
  out.note("regularizer gradient: worst relative error %.3g", worst_reg);
  return out;
}

Outcome criterion4() {
  Outcome out;
  Rng rng(404);
  int violations = 0;
  double tightest = 0.0;
  const Activation fns[] = {Activation::relu, Activation::tanh, Activation::identity};
  for (int t = 0; t < 100; ++t) {
    const Activation fn = fns[t % 3];
    Net net;
    if (t % 10 == 9) {
      net = small_convnet(rng);
      for (Layer& layer : net.features)
        if (auto* a = std::get_if<ActivationLayer>(&layer)) a->fn = fn;
    } else {
      std::vector<Index> hidden;
      const Index depth = 1 + static_cast<Index>(rng.uniform_index(3));
      for (Index l = 0; l < depth; ++l) hidden.push_back(2 + static_cast<Index>(rng.uniform_index(8)));
      net = make_mlp(2 + static_cast<Index>(rng.uniform_index(5)), hidden, 3, fn, true, {}, rng);
      for (Eigen::VectorXd* b : bias_slots(net)) *b = gaussian_vector(rng, b->size(), 0.0, 0.5);
    }
    const std::vector<double> s2 = weight_layer_sigma2(net);
    double product = 1.0;
    for (size_t l = 0; l + 1 < s2.size(); ++l) product *= s2[l];
    const double lam = lambda_max(metric_tensor(net, gaussian_vector(rng, net.input_dim, 0.0, 1.0)));
    if (lam > product * (1.0 + 1e-12)) ++violations;
    tightest = std::max(tightest, lam / product);
  }
  out.pass = violations == 0;
  out.note("100 nets: %d violations of lambda_max(g) <= prod sigma_max^2; max ratio %.4f",
           violations, tightest);
  return out;
}

Outcome criterion5() {
  Outcome out;
  const Dataset ds = clean_xor();
  int checked = 0, violations = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  for (RegMode mode : {RegMode::none, RegMode::ll_spectral, RegMode::rep_spectral}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Net net = train_xor(mode, 0.0, seed);
      for (Index i = 0; i < ds.size(); ++i) {
        const Eigen::VectorXd x = ds.inputs.col(i);
        const int c = ds.labels[static_cast<size_t>(i)];
        if (predict(net, x) != c) continue;
        DecisionOracle oracle = net_oracle(net);
        const double brute = brute_force_distance(oracle, x, c, 720, 1e-9, 4.0);
        const double cert = certified_radius(net, x, c);
        ++checked;
        if (!(brute >= cert)) ++violations;
        min_slack = std::min(min_slack, brute - cert);
      }
    }
  }
  Rng rng(505);
  double worst_linear = 0.0;
  for (int t = 0; t < 50; ++t) {
    Net lin;
    lin.input_dim = 2;
    lin.readout.weight = gaussian_matrix(rng, 2, 2, 0.0, 1.0);
    lin.readout.bias = gaussian_vector(rng, 2, 0.0, 1.0);
    const Eigen::VectorXd x = gaussian_vector(rng, 2, 0.0, 1.0);
    const int c = predict(lin, x);
    const Eigen::VectorXd dw = (lin.readout.weight.row(c) - lin.readout.weight.row(1 - c)).transpose();
    const double exact = (dw.dot(x) + lin.readout.bias[c] - lin.readout.bias[1 - c]) / dw.norm();
    worst_linear = std::max(worst_linear, std::abs(certified_radius(lin, x, c) - exact));
  }
  out.pass = checked > 0 && violations == 0 && worst_linear <= 1e-6;
  out.note("%d trained-net points checked, %d violations, smallest slack %.4g", checked,
           violations, min_slack);
  out.note("linear classifiers: worst |certificate - exact margin| = %.3g", worst_linear);
  return out;
}

Outcome criterion6() {
  Outcome out;
  out.pass = true;
  Rng rng(606);
  for (Index n : {2, 10}) {
    int within = 0;
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const Eigen::VectorXd normal = random_unit_vector(rng, n);
      const double margin = 0.1 + 0.9 * rng.uniform();
      DecisionOracle oracle = halfspace_oracle(normal, margin);
      AttackConfig cfg;
      cfg.iterations = 40;
      const AttackResult r = tangent_attack(oracle, Eigen::VectorXd::Zero(n), 0, cfg, rng);
      const double err = r.success ? std::abs(r.delta - margin) / margin : INFINITY;
      worst = std::max(worst, err);
      within += err <= 0.05;
    }
    out.pass = out.pass && within >= 95;
    out.note("R^%ld: %d/100 trials within 5%% of the exact margin (worst %.3g)", static_cast<long>(n),
             within, worst);
  }
  return out;
}

Outcome criterion7() {
  Outcome out;
  out.pass = true;
  const Dataset ds = clean_xor();
  const RegMode modes[] = {RegMode::none, RegMode::ll_spectral, RegMode::rep_spectral};
  for (double wd : {0.0, 1e-4}) {
    double mean[3] = {0.0, 0.0, 0.0};
    int fitted = 0, runs = 0;
    for (int m = 0; m < 3; ++m) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Net net = train_xor(modes[m], wd, seed);
        ++runs;
        fitted += accuracy(net, ds) == 1.0;
        double total = 0.0;
        for (Index i = 0; i < ds.size(); ++i) {
          DecisionOracle oracle = net_oracle(net);
          AttackConfig cfg;
          cfg.input_range = 2.0;
          Rng rng(1000 + seed, static_cast<std::uint64_t>(i));
          total += tangent_attack(oracle, ds.inputs.col(i), ds.labels[static_cast<size_t>(i)], cfg, rng).delta;
        }
        mean[m] += total / static_cast<double>(ds.size()) / 5.0;
      }
    }
    const bool ok = fitted == runs && mean[2] > mean[1] && mean[2] > mean[0];
    out.pass = out.pass && ok;
    out.note("wd=%g: %d/%d runs fit 4/4; mean TA distance none %.4f, ll-spectral %.4f, "
             "rep-spectral %.4f (%s)",
             wd, fitted, runs, mean[0], mean[1], mean[2], ok ? "ordering holds" : "ordering fails");
  }
  return out;
}

Outcome criterion8() {
  Outcome out;
  out.pass = true;
  for (double wd : {0.0, 1e-4}) {
    int feature_ok = 0, readout_ok = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const std::vector<double> rep = weight_layer_sigma2(train_xor(RegMode::rep_spectral, wd, seed));
      const std::vector<double> ll = weight_layer_sigma2(train_xor(RegMode::ll_spectral, wd, seed));
      feature_ok += rep.front() < ll.front();
      readout_ok += ll.back() < rep.back();
    }
    out.pass = out.pass && feature_ok >= 4 && readout_ok >= 4;
    out.note("wd=%g: feature sigma_max rep < ll on %d/5 seeds; readout sigma_max ll < rep on %d/5",
             wd, feature_ok, readout_ok);
  }
  return out;
}

Outcome criterion9() {
  Outcome out;
  const char* env = std::getenv("SPECGUARD_DATA_DIR");
  const std::string root = !g_data_dir.empty() ? g_data_dir : env ? env : "";
  const auto files = root.empty() ? std::nullopt : find_mnist(root);
  if (!files) {
    out.note("MNIST IDX files not found (set SPECGUARD_DATA_DIR); criterion not evaluated");
    return out;
  }
  const Dataset full = load_mnist_idx(files->train_images, files->train_labels);
  Dataset test = load_mnist_idx(files->test_images, files->test_labels);
  test.split = "test";
  Rng sample_rng(0);
  const Dataset train = subset_sample(full, 10000, true, sample_rng);
  Rng order_rng(1);
  const std::vector<Index> order = permutation(test.size(), order_rng);

  auto mean_distance = [&](const Net& net) {
    double total = 0.0;
    int count = 0;
    for (Index i : order) {
      if (count == 100) break;
      const Eigen::VectorXd x = test.inputs.col(i);
      const int y = test.labels[static_cast<size_t>(i)];
      if (predict(net, x) != y) continue;
      DecisionOracle oracle = net_oracle(net);
      AttackConfig cfg;
      cfg.input_range = test.norm.range();
      Rng rng(7, static_cast<std::uint64_t>(i));
      total += tangent_attack(oracle, x, y, cfg, rng).delta;
      ++count;
    }
    return total / count;
  };

  const RegMode modes[] = {RegMode::none, RegMode::ll_spectral, RegMode::rep_spectral};
  double acc[3], dist[3], acc_rt[3], dist_rt[3];
  for (int m = 0; m < 3; ++m) {
    Rng init(0);
    Net net = make_mlp(784, {256}, 10, Activation::relu, true, {}, init);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 1024;
    cfg.lr = 0.1;
    cfg.momentum = 0.9;
    cfg.weight_decay = 1e-4;
    cfg.seed = 0;
    cfg.reg.mode = modes[m];
    cfg.reg.gamma = 1e-3;
    cfg.reg.burn_in_epoch = 160;
    cfg.log_sigma2 = false;
    train_supervised(net, train, cfg);
    acc[m] = accuracy(net, test);
    dist[m] = mean_distance(net);
    const ReadoutFit fit = retrain_readout(feature_map_batch(net, train.inputs), train.labels, 10, 1.0);
    Net retrained = net;
    retrained.readout = fit.readout;
    acc_rt[m] = accuracy(retrained, test);
    dist_rt[m] = mean_distance(retrained);
    out.note("%s: test acc %.4f, mean distance %.4f; retrained readout (%s, |grad| %.2g): "
             "acc %.4f, mean distance %.4f",
             to_string(modes[m]).c_str(), acc[m], dist[m], fit.converged ? "converged" : "not converged",
             fit.grad_norm, acc_rt[m], dist_rt[m]);
  }
  const bool joint = dist[2] > dist[0] && acc[0] - acc[2] <= 0.02;
  const bool retrained = dist_rt[2] > dist_rt[0] && dist_rt[2] > dist_rt[1];
  out.pass = joint && retrained && acc[0] >= 0.90;
  out.note("rep > none with accuracy drop <= 2 points: %s; after retraining rep > none and rep > "
           "ll: %s; unregularized accuracy >= 90%%: %s",
           joint ? "yes" : "no", retrained ? "yes" : "no", acc[0] >= 0.90 ? "yes" : "no");
  return out;
}

Outcome criterion10() {
  Outcome out;
  const EtfFrame frame = make_simplex_etf(3, 2);
  bool aligned = true;
  for (double std : {0.001, 0.1}) {
    Rng rng(1010);
    const AlignmentTrajectory t = lastlayer_gd(frame, std, 0.01, 5000, rng, 100);
    const double worst = t.steps.back().cosine.minCoeff();
    aligned = aligned && !t.diverged && worst >= 0.99;
    out.note("init std %g: min cos(W_k, z_k) after 5000 steps = %.5f", std, worst);
  }
  Rng rng(1011);
  const AlignmentTrajectory t = lastlayer_gd(frame, 0.001, 0.01, 5000, rng, 5000);
  Net net;
  net.input_dim = 2;
  net.readout.weight = t.w;
  double worst_theta = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 3; ++k)
      if (c != k)
        worst_theta = std::max(worst_theta, std::abs(theta_x(net, frame.z.col(c), c, k) - std::sqrt(3.0) / 2.0));
  Rng tiny(1012);
  const Eigen::MatrixXd w0 = gaussian_matrix(tiny, 3, 2, 0.0, 1e-6);
  const Eigen::MatrixXd g = lastlayer_grad(w0, frame);
  double worst_cos = 1.0;
  for (Index k = 0; k < 3; ++k)
    worst_cos = std::min(worst_cos, (-g.row(k).transpose()).normalized().dot(frame.z.col(k)));
  out.pass = aligned && worst_theta <= 1e-2 && worst_cos >= 0.999;
  out.note("empirical theta vs sqrt(3)/2: worst gap %.3g", worst_theta);
  out.note("first-step direction at std 1e-6: min cosine with z_k = %.7f", worst_cos);
  return out;
}

Outcome criterion11() {
  Outcome out;
  const Dataset ds = clean_xor();
  int good_seeds = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng init(seed);
    Net net = make_mlp(2, {20}, 2, Activation::gelu, true, small_gaussian(), init);
    TrainConfig cfg = xor_protocol(RegMode::none, 0.0, seed);
    cfg.momentum = 0.0;  // plain full-batch gradient descent
    cfg.track_samples = {0, 1, 2, 3};
    const TrainLog log = train_supervised(net, ds, cfg);
    bool all = true;
    for (size_t p = 0; p < 4; ++p) {
      const ConfidencePoint& a = log.initial.tracked[p];
      const ConfidencePoint& b = log.epochs.back().tracked[p];
      all = all && b.theta > a.theta && b.feat_norm > a.feat_norm;
    }
    good_seeds += all;
    const ConfidencePoint& a = log.initial.tracked[0];
    const ConfidencePoint& b = log.epochs.back().tracked[0];
    out.note("seed %lu: %s (point 0: theta %.3f -> %.3f, |Phi| %.3g -> %.3g)",
             static_cast<unsigned long>(seed), all ? "both expand at every point" : "not all expand",
             a.theta, b.theta, a.feat_norm, b.feat_norm);
  }
  out.pass = good_seeds >= 4;
  out.note("%d/5 seeds expand both quantities at every training point", good_seeds);
  return out;
}

Outcome criterion12() {
  Outcome out;
  auto run = [] {
    Rng data_rng(3);
    const Dataset ds = xor_dataset(true, 20, 0.2, data_rng);
    Rng init(5);
    Net net = make_mlp(2, {8}, 2, Activation::gelu, true, {}, init);
    TrainConfig cfg;
    cfg.epochs = 300;
    cfg.batch_size = 16;
    cfg.lr = 0.5;
    cfg.momentum = 0.9;
    cfg.weight_decay = 1e-4;
    cfg.seed = 42;
    cfg.reg.mode = RegMode::rep_spectral;
    cfg.reg.gamma = 1e-3;
    cfg.reg.burn_in_epoch = 200;
    cfg.reg.refresh_period = 3;
    cfg.track_samples = {0, 7, 33};
    std::ostringstream train_csv;
    train_supervised(net, ds, cfg).write_csv(train_csv);
    std::vector<AttackRow> rows;
    for (Index i = 0; i < ds.size(); i += 5) {
      const int y = ds.labels[static_cast<size_t>(i)];
      if (predict(net, ds.inputs.col(i)) != y) continue;
      DecisionOracle oracle = net_oracle(net);
      AttackConfig acfg;
      acfg.input_range = 2.0;
      Rng rng(42, static_cast<std::uint64_t>(i));
      const AttackResult r = tangent_attack(oracle, ds.inputs.col(i), y, acfg, rng);
      rows.push_back({i, y, r.adv_label, r.delta, r.queries});
    }
    std::ostringstream attack_csv;
    write_attack_csv(attack_csv, rows);
    return std::make_pair(train_csv.str(), attack_csv.str());
  };
  const auto a = run();
  const auto b = run();
  out.pass = a.first == b.first && a.second == b.second;
  out.note("TrainLog CSV identical: %s (%zu bytes); attack CSV identical: %s (%zu bytes)",
           a.first == b.first ? "yes" : "no", a.first.size(), a.second == b.second ? "yes" : "no",
           a.second.size());
  return out;
}

struct Criterion {
  int id;
  const char* title;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "conv spectrum matches the linearized operator", criterion1},
    {2, "power iteration convergence and warm start", criterion2},
    {3, "gradient checks", criterion3},
    {4, "metric eigenvalue bounded by the layer norm product", criterion4},
    {5, "certified bound below the brute-force distance", criterion5},
    {6, "tangent attack on linear oracles", criterion6},
    {7, "xor robustness ordering", criterion7},
    {8, "xor weight-norm pattern", criterion8},
    {9, "mnist desk-scale robustness", criterion9},
    {10, "etf alignment", criterion10},
    {11, "theta and feature norm expansion on xor", criterion11},
    {12, "determinism of logs and attack results", criterion12},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"specguard acceptance checks"};
  int only = 0;
  app.add_option("--only", only, "Run a single criterion (1-12)")->check(CLI::Range(1, 12));
  app.add_option("--data-dir", g_data_dir, "Dataset root (defaults to SPECGUARD_DATA_DIR)");
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  for (const Criterion& c : kCriteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.details.push_back(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d %s: %s (%.1f s)\n", c.id, o.pass ? "PASS" : "FAIL", c.title, secs);
    for (const std::string& d : o.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
