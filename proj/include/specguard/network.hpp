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

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "specguard/conv.hpp"
#include "specguard/numerics.hpp"

namespace specguard {

enum class Activation { identity, relu, tanh, gelu };

double activate(Activation fn, double z);
/// Derivative; ReLU uses 0 at the kink.
double activate_derivative(Activation fn, double z);
/// sup_z |phi'(z)|. GELU peaks slightly above one at z = sqrt(2).
double max_abs_derivative(Activation fn);

std::string to_string(Activation fn);
Activation parse_activation(std::string_view name);

struct DenseLayer {
  Eigen::MatrixXd weight;  // (out, in)
  Eigen::VectorXd bias;    // empty when the layer has no bias

  Index in_dim() const { return weight.cols(); }
  Index out_dim() const { return weight.rows(); }
  bool has_bias() const { return bias.size() > 0; }
};

struct ConvLayer {
  ConvSpec spec;
  KernelMatrix weight;    // (c_out, c_in*k*k)
  Eigen::VectorXd bias;   // per output channel; empty when absent

  bool has_bias() const { return bias.size() > 0; }
};

struct ActivationLayer {
  Activation fn = Activation::identity;
};

using Layer = std::variant<DenseLayer, ConvLayer, ActivationLayer>;

Index layer_in_dim(const Layer& layer, Index incoming);
Index layer_out_dim(const Layer& layer, Index incoming);

/// Classifier split into a feature map (ordered layers) and a linear readout.
/// Logits are readout(features(x)); softmax is only applied on request.
struct Net {
  Index input_dim = 0;
  std::vector<Layer> features;
  DenseLayer readout;

  Index feature_dim() const { return readout.in_dim(); }
  Index classes() const { return readout.out_dim(); }

  /// Throws std::invalid_argument when layer shapes do not chain.
  void validate() const;

  /// Positions in `features` of dense and conv layers, in order.
  std::vector<size_t> weight_layer_positions() const;
  /// Number of weight layers including the readout.
  size_t weight_layer_count() const { return weight_layer_positions().size() + 1; }
};

/// Parameter gradient for one layer; empty matrices for activation layers.
struct ParamGrad {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

struct Gradients {
  std::vector<ParamGrad> features;
  ParamGrad readout;

  static Gradients zeros_like(const Net& net);
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
  bool all_zero() const;
};

/// Per-layer inputs recorded by a forward pass over a batch (one column per
/// sample). inputs[l] is what entered features[l]; for activation layers it
/// is the preactivation.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;
  Eigen::MatrixXd features;
  Eigen::MatrixXd logits;
};

ForwardCache forward_batch(const Net& net, const Eigen::MatrixXd& x);

struct ForwardResult {
  Eigen::VectorXd logits;
  ForwardCache cache;
};

ForwardResult forward(const Net& net, const Eigen::VectorXd& x);

/// Reverse-mode pass. `dlogits` is dLoss/dlogits with one column per sample;
/// gradients are summed over the batch.
Gradients backward(const Net& net, const ForwardCache& cache,
                   const Eigen::MatrixXd& dlogits);

Eigen::VectorXd feature_map(const Net& net, const Eigen::VectorXd& x);
Eigen::MatrixXd feature_map_batch(const Net& net, const Eigen::MatrixXd& x);

/// Jacobian of the feature map with respect to the input (d x n).
Eigen::MatrixXd input_jacobian_feature(const Net& net, const Eigen::VectorXd& x);

/// Argmax with ties resolved toward the lowest index.
int argmax(const Eigen::Ref<const Eigen::VectorXd>& v);
int predict(const Net& net, const Eigen::VectorXd& x);
std::vector<int> predict_batch(const Net& net, const Eigen::MatrixXd& x);

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);

struct LossAndGrad {
  double loss = 0.0;        // mean over the batch
  Eigen::MatrixXd dlogits;  // already divided by the batch size
};

/// Mean softmax cross-entropy over the columns of `logits`.
LossAndGrad softmax_cross_entropy(const Eigen::MatrixXd& logits,
                                  const std::vector<int>& labels);

struct InitOptions {
  enum class Scheme { fan_in, uniform, gaussian };
  Scheme scheme = Scheme::fan_in;
  double std = 0.01;  // used by Scheme::gaussian
};

/// Fully connected classifier: dense+activation per hidden width, then a
/// dense readout. fan_in: weights N(0, 1/fan_in), zero biases. uniform:
/// weights and biases U(-a, a) with a = 1/sqrt(fan_in). gaussian: every
/// weight and bias N(0, std^2).
Net make_mlp(Index input_dim, const std::vector<Index>& hidden, Index classes,
             Activation fn, bool readout_bias, const InitOptions& init, Rng& rng);

}  // namespace specguard
