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

#include "specguard/network.hpp"

#include <cmath>
#include <numbers>

namespace specguard {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_cdf(double z) { return 0.5 * (1.0 + std::erf(z * kInvSqrt2)); }
double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

Eigen::MatrixXd apply_activation(Activation fn, const Eigen::MatrixXd& z) {
  return z.unaryExpr([fn](double v) { return activate(fn, v); });
}

Eigen::MatrixXd activation_derivative(Activation fn, const Eigen::MatrixXd& z) {
  return z.unaryExpr([fn](double v) { return activate_derivative(fn, v); });
}

Eigen::MatrixXd apply_layer(const Layer& layer, const Eigen::MatrixXd& x) {
  return std::visit(
      overloaded{
          [&](const DenseLayer& d) -> Eigen::MatrixXd {
            Eigen::MatrixXd y = d.weight * x;
            if (d.has_bias()) y.colwise() += d.bias;
            return y;
          },
          [&](const ConvLayer& c) -> Eigen::MatrixXd {
            Eigen::MatrixXd y(c.spec.out_size(), x.cols());
            const Index plane = c.spec.out_h() * c.spec.out_w();
            for (Index j = 0; j < x.cols(); ++j) {
              y.col(j) = conv_apply(c.spec, c.weight, x.col(j));
              if (c.has_bias()) {
                for (Index o = 0; o < c.spec.c_out; ++o)
                  y.col(j).segment(o * plane, plane).array() += c.bias[o];
              }
            }
            return y;
          },
          [&](const ActivationLayer& a) -> Eigen::MatrixXd {
            return apply_activation(a.fn, x);
          }},
      layer);
}

void check_input(const Net& net, const Eigen::MatrixXd& x) {
  if (x.rows() != net.input_dim) {
    throw std::invalid_argument("input dimension " + std::to_string(x.rows()) +
                                " does not match net input_dim " +
                                std::to_string(net.input_dim));
  }
}

}  // namespace

double activate(Activation fn, double z) {
  switch (fn) {
    case Activation::identity:
      return z;
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
    case Activation::tanh:
      return std::tanh(z);
    case Activation::gelu:
      return z * normal_cdf(z);
  }
  return z;
}

double activate_derivative(Activation fn, double z) {
  switch (fn) {
    case Activation::identity:
      return 1.0;
    case Activation::relu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::gelu:
      return normal_cdf(z) + z * normal_pdf(z);
  }
  return 1.0;
}

double max_abs_derivative(Activation fn) {
  if (fn == Activation::gelu) {
    // GELU'' = phi(z)(2 - z^2) vanishes at z = sqrt(2).
    return activate_derivative(fn, std::numbers::sqrt2);
  }
  return 1.0;
}

std::string to_string(Activation fn) {
  switch (fn) {
    case Activation::identity:
      return "identity";
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
    case Activation::gelu:
      return "gelu";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "gelu") return Activation::gelu;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

Index layer_in_dim(const Layer& layer, Index incoming) {
  return std::visit(overloaded{[](const DenseLayer& d) { return d.in_dim(); },
                               [](const ConvLayer& c) { return c.spec.in_size(); },
                               [&](const ActivationLayer&) { return incoming; }},
                    layer);
}

Index layer_out_dim(const Layer& layer, Index incoming) {
  return std::visit(overloaded{[](const DenseLayer& d) { return d.out_dim(); },
                               [](const ConvLayer& c) { return c.spec.out_size(); },
                               [&](const ActivationLayer&) { return incoming; }},
                    layer);
}

void Net::validate() const {
  Index dim = input_dim;
  for (size_t l = 0; l < features.size(); ++l) {
    const Layer& layer = features[l];
    if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      c->spec.validate();
      if (c->weight.rows() != c->spec.c_out || c->weight.cols() != c->spec.kernel_cols()) {
        throw std::invalid_argument("conv layer " + std::to_string(l) +
                                    ": kernel shape does not match spec");
      }
      if (c->has_bias() && c->bias.size() != c->spec.c_out) {
        throw std::invalid_argument("conv layer bias size mismatch");
      }
    }
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      if (d->has_bias() && d->bias.size() != d->out_dim()) {
        throw std::invalid_argument("dense layer bias size mismatch");
      }
    }
    if (layer_in_dim(layer, dim) != dim) {
      throw std::invalid_argument("layer " + std::to_string(l) + " expects input of " +
                                  std::to_string(layer_in_dim(layer, dim)) +
                                  " but receives " + std::to_string(dim));
    }
    dim = layer_out_dim(layer, dim);
  }
  if (readout.in_dim() != dim) {
    throw std::invalid_argument("readout input does not match feature dimension");
  }
  if (readout.has_bias() && readout.bias.size() != readout.out_dim()) {
    throw std::invalid_argument("readout bias size mismatch");
  }
  if (readout.out_dim() < 1) throw std::invalid_argument("readout has no classes");
}

std::vector<size_t> Net::weight_layer_positions() const {
  std::vector<size_t> pos;
  for (size_t l = 0; l < features.size(); ++l) {
    if (!std::holds_alternative<ActivationLayer>(features[l])) pos.push_back(l);
  }
  return pos;
}

Gradients Gradients::zeros_like(const Net& net) {
  Gradients g;
  g.features.resize(net.features.size());
  for (size_t l = 0; l < net.features.size(); ++l) {
    std::visit(overloaded{[&](const DenseLayer& d) {
                            g.features[l].weight = Eigen::MatrixXd::Zero(d.weight.rows(), d.weight.cols());
                            g.features[l].bias = Eigen::VectorXd::Zero(d.bias.size());
                          },
                          [&](const ConvLayer& c) {
                            g.features[l].weight = Eigen::MatrixXd::Zero(c.weight.rows(), c.weight.cols());
                            g.features[l].bias = Eigen::VectorXd::Zero(c.bias.size());
                          },
                          [](const ActivationLayer&) {}},
               net.features[l]);
  }
  g.readout.weight = Eigen::MatrixXd::Zero(net.readout.weight.rows(), net.readout.weight.cols());
  g.readout.bias = Eigen::VectorXd::Zero(net.readout.bias.size());
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.features.size() != features.size()) {
    throw std::invalid_argument("Gradients: layer count mismatch");
  }
  for (size_t l = 0; l < features.size(); ++l) {
    if (features[l].weight.size() > 0) features[l].weight += other.features[l].weight;
    if (features[l].bias.size() > 0) features[l].bias += other.features[l].bias;
  }
  readout.weight += other.readout.weight;
  if (readout.bias.size() > 0) readout.bias += other.readout.bias;
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (auto& f : features) {
    f.weight *= s;
    f.bias *= s;
  }
  readout.weight *= s;
  readout.bias *= s;
  return *this;
}

bool Gradients::all_zero() const {
  auto zero = [](const ParamGrad& p) {
    return (p.weight.size() == 0 || p.weight.isZero(0.0)) &&
           (p.bias.size() == 0 || p.bias.isZero(0.0));
  };
  for (const auto& f : features)
    if (!zero(f)) return false;
  return zero(readout);
}

ForwardCache forward_batch(const Net& net, const Eigen::MatrixXd& x) {
  check_input(net, x);
  ForwardCache cache;
  cache.inputs.reserve(net.features.size());
  Eigen::MatrixXd h = x;
  for (const Layer& layer : net.features) {
    Eigen::MatrixXd next = apply_layer(layer, h);
    cache.inputs.push_back(std::move(h));
    h = std::move(next);
  }
  cache.logits = net.readout.weight * h;
  if (net.readout.has_bias()) cache.logits.colwise() += net.readout.bias;
  cache.features = std::move(h);
  return cache;
}

ForwardResult forward(const Net& net, const Eigen::VectorXd& x) {
  ForwardResult r;
  r.cache = forward_batch(net, x);
  r.logits = r.cache.logits.col(0);
  return r;
}

Gradients backward(const Net& net, const ForwardCache& cache,
                   const Eigen::MatrixXd& dlogits) {
  if (cache.inputs.size() != net.features.size() ||
      cache.features.rows() != net.feature_dim() ||
      dlogits.rows() != net.classes() || dlogits.cols() != cache.features.cols()) {
    throw std::logic_error("backward: cache does not belong to this net/batch");
  }
  Gradients g = Gradients::zeros_like(net);
  g.readout.weight = dlogits * cache.features.transpose();
  if (net.readout.has_bias()) g.readout.bias = dlogits.rowwise().sum();
  Eigen::MatrixXd delta = net.readout.weight.transpose() * dlogits;

  for (size_t li = net.features.size(); li-- > 0;) {
    const Eigen::MatrixXd& in = cache.inputs[li];
    ParamGrad& pg = g.features[li];
    std::visit(
        overloaded{
            [&](const DenseLayer& d) {
              pg.weight = delta * in.transpose();
              if (d.has_bias()) pg.bias = delta.rowwise().sum();
              delta = d.weight.transpose() * delta;
            },
            [&](const ConvLayer& c) {
              const Index plane = c.spec.out_h() * c.spec.out_w();
              Eigen::MatrixXd prev(c.spec.in_size(), delta.cols());
              for (Index j = 0; j < delta.cols(); ++j) {
                pg.weight += conv_kernel_grad(c.spec, delta.col(j), in.col(j));
                if (c.has_bias()) {
                  for (Index o = 0; o < c.spec.c_out; ++o)
                    pg.bias[o] += delta.col(j).segment(o * plane, plane).sum();
                }
                prev.col(j) = conv_adjoint(c.spec, c.weight, delta.col(j));
              }
              delta = std::move(prev);
            },
            [&](const ActivationLayer& a) {
              delta = delta.cwiseProduct(activation_derivative(a.fn, in));
            }},
        net.features[li]);
  }
  return g;
}

Eigen::VectorXd feature_map(const Net& net, const Eigen::VectorXd& x) {
  return feature_map_batch(net, x).col(0);
}

Eigen::MatrixXd feature_map_batch(const Net& net, const Eigen::MatrixXd& x) {
  check_input(net, x);
  Eigen::MatrixXd h = x;
  for (const Layer& layer : net.features) h = apply_layer(layer, h);
  return h;
}

Eigen::MatrixXd input_jacobian_feature(const Net& net, const Eigen::VectorXd& x) {
  check_input(net, x);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(net.input_dim, net.input_dim);
  Eigen::VectorXd h = x;
  for (const Layer& layer : net.features) {
    std::visit(overloaded{[&](const DenseLayer& d) { jac = d.weight * jac; },
                          [&](const ConvLayer& c) {
                            Eigen::MatrixXd next(c.spec.out_size(), jac.cols());
                            for (Index j = 0; j < jac.cols(); ++j)
                              next.col(j) = conv_apply(c.spec, c.weight, jac.col(j));
                            jac = std::move(next);
                          },
                          [&](const ActivationLayer& a) {
                            const Eigen::VectorXd dphi = activation_derivative(a.fn, h);
                            jac = dphi.asDiagonal() * jac;
                          }},
               layer);
    h = apply_layer(layer, h);
  }
  return jac;
}

int argmax(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() == 0) throw std::invalid_argument("argmax of empty vector");
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return static_cast<int>(best);
}

int predict(const Net& net, const Eigen::VectorXd& x) {
  return argmax(forward_batch(net, x).logits.col(0));
}

std::vector<int> predict_batch(const Net& net, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd logits = forward_batch(net, x).logits;
  std::vector<int> out(static_cast<size_t>(logits.cols()));
  for (Index j = 0; j < logits.cols(); ++j) out[static_cast<size_t>(j)] = argmax(logits.col(j));
  return out;
}

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

LossAndGrad softmax_cross_entropy(const Eigen::MatrixXd& logits,
                                  const std::vector<int>& labels) {
  if (static_cast<Index>(labels.size()) != logits.cols()) {
    throw std::invalid_argument("cross entropy: label count mismatch");
  }
  const Index m = logits.cols();
  LossAndGrad r;
  r.dlogits.resize(logits.rows(), m);
  double total = 0.0;
  for (Index j = 0; j < m; ++j) {
    const int y = labels[static_cast<size_t>(j)];
    if (y < 0 || y >= logits.rows()) throw std::invalid_argument("label out of range");
    const double mx = logits.col(j).maxCoeff();
    const Eigen::ArrayXd e = (logits.col(j).array() - mx).exp();
    const double s = e.sum();
    total += std::log(s) + mx - logits(y, j);
    r.dlogits.col(j) = e / s;
    r.dlogits(y, j) -= 1.0;
  }
  r.loss = total / static_cast<double>(m);
  r.dlogits /= static_cast<double>(m);
  return r;
}

Net make_mlp(Index input_dim, const std::vector<Index>& hidden, Index classes,
             Activation fn, bool readout_bias, const InitOptions& init, Rng& rng) {
  auto make_dense = [&](Index in, Index out, bool bias) {
    DenseLayer d;
    if (init.scheme == InitOptions::Scheme::gaussian) {
      d.weight = gaussian_matrix(rng, out, in, 0.0, init.std);
      if (bias) d.bias = gaussian_vector(rng, out, 0.0, init.std);
    } else if (init.scheme == InitOptions::Scheme::uniform) {
      const double a = 1.0 / std::sqrt(static_cast<double>(in));
      d.weight.resize(out, in);
      for (Index j = 0; j < in; ++j)
        for (Index i = 0; i < out; ++i) d.weight(i, j) = a * (2.0 * rng.uniform() - 1.0);
      if (bias) {
        d.bias.resize(out);
        for (Index i = 0; i < out; ++i) d.bias[i] = a * (2.0 * rng.uniform() - 1.0);
      }
    } else {
      d.weight = gaussian_matrix(rng, out, in, 0.0, 1.0 / std::sqrt(static_cast<double>(in)));
      if (bias) d.bias = Eigen::VectorXd::Zero(out);
    }
    return d;
  };
  Net net;
  net.input_dim = input_dim;
  Index dim = input_dim;
  for (Index width : hidden) {
    net.features.emplace_back(make_dense(dim, width, true));
    net.features.emplace_back(ActivationLayer{fn});
    dim = width;
  }
  net.readout = make_dense(dim, classes, readout_bias);
  net.validate();
  return net;
}

}  // namespace specguard
