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

#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "specguard/network.hpp"
#include "specguard/spectral.hpp"

namespace specguard {

enum class RegMode { none, rep_spectral, ll_spectral };

std::string to_string(RegMode mode);
/// Accepts "none", "rep-spectral", "ll-spectral".
RegMode parse_reg_mode(std::string_view name);

struct RegConfig {
  RegMode mode = RegMode::none;
  double gamma = 0.0;
  int burn_in_epoch = 0;
  int refresh_period = 1;     // parameter updates between refreshes
  int iters_per_refresh = 1;  // power-iteration rounds per refresh

  /// Throws std::invalid_argument; total_epochs < 0 skips the burn-in check.
  void validate(int total_epochs = -1) const;

  /// Penalty contributes to the loss during this epoch.
  bool active(int epoch) const {
    return mode != RegMode::none && epoch >= burn_in_epoch;
  }
  /// Power iteration runs during this epoch (final 10% of burn-in onward).
  bool warming(int epoch) const;
};

/// Position value marking the readout in SpectralState.
inline constexpr size_t kReadoutLayer = std::numeric_limits<size_t>::max();

/// Cached top singular triple of one regularized layer. Conv layers keep the
/// triple of the periodic convolution operator in image coordinates.
struct LayerSpectrum {
  size_t position = 0;  // index into Net::features, or kReadoutLayer
  SingularTriple<double> triple;
};

struct SpectralState {
  std::vector<LayerSpectrum> layers;

  /// One entry per regularized layer with a random unit starting vector.
  /// Ages start at refresh_period - 1 so the first refresh() converges them.
  static SpectralState init(const Net& net, const RegConfig& cfg, Rng& rng);
};

/// Operator of the weight layer at `position` (kReadoutLayer for the readout).
LinearOperator<double> layer_operator(const Net& net, size_t position);

/// (gamma/2) * sum over regularized layers of |W v|^2, where v is the cached
/// right vector; equals (gamma/2) * sum sigma_max^2 when the state is converged.
/// Returns 0 for RegMode::none.
double penalty(const Net& net, const RegConfig& cfg, const SpectralState& state);

/// Gradient of penalty(): gamma * sigma * u v^T per regularized layer, with
/// sigma u = W v taken from the current weights. Dense layers receive a matrix
/// and conv layers a kernel gradient; biases and unregularized layers get
/// zeros. Entries older than refresh_period are refreshed first.
Gradients penalty_grads(const Net& net, const RegConfig& cfg, SpectralState& state);

/// Called once per parameter update: every layer ages by one and layers whose
/// age reaches refresh_period get iters_per_refresh warm-started rounds.
void refresh(SpectralState& state, const Net& net, const RegConfig& cfg);

/// Runs `iterations` warm-started rounds on every layer and resets ages.
void converge(SpectralState& state, const Net& net, int iterations);

/// Exact sigma_max^2 of every weight layer, features first then readout.
std::vector<double> weight_layer_sigma2(const Net& net);

}  // namespace specguard
