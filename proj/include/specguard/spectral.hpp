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

#include <cmath>
#include <functional>
#include <memory>
#include <type_traits>

#include "specguard/conv.hpp"
#include "specguard/numerics.hpp"

namespace specguard {

/// Matrix-free linear map exposing y = M x and x = M^* y.
template <typename Scalar>
struct LinearOperator {
  Index rows = 0;
  Index cols = 0;
  std::function<VectorX<Scalar>(const VectorX<Scalar>&)> apply;
  std::function<VectorX<Scalar>(const VectorX<Scalar>&)> adjoint;
};

template <typename Derived>
LinearOperator<typename Derived::Scalar> dense_operator(
    const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  // Captured by reference: the operator must not outlive the matrix.
  const auto& ref = m.derived();
  return {m.rows(), m.cols(),
          [&ref](const VectorX<Scalar>& x) -> VectorX<Scalar> { return ref * x; },
          [&ref](const VectorX<Scalar>& y) -> VectorX<Scalar> {
            return ref.adjoint() * y;
          }};
}

/// Operator form of a periodic convolution; keeps its own copy of the kernel.
LinearOperator<double> conv_operator(const ConvSpec& spec, KernelMatrix kernel);

/// Cached top singular triple. `age` counts parameter updates since the
/// vectors were last refreshed.
template <typename Scalar = double>
struct SingularTriple {
  double sigma2 = 0.0;
  VectorX<Scalar> u;
  VectorX<Scalar> v;
  int age = 0;
  bool degenerate = false;

  double sigma() const { return std::sqrt(sigma2); }
};

/// Power iteration for the squared top singular value.
///
/// Starting from v0 (normalized here), performs `iterations` rounds of
/// u = M v / |M v|, v = M^* u / |M^* u| and returns lambda = |M v|^2 together
/// with u = M v / |M v| and the final v. A zero operator yields lambda = 0.
template <typename Scalar>
SingularTriple<Scalar> power_iter_sigma2(const LinearOperator<Scalar>& op,
                                         const std::type_identity_t<VectorX<Scalar>>& v0,
                                         int iterations) {
  if (iterations < 1) throw std::invalid_argument("power_iter: iterations < 1");
  if (v0.size() != op.cols) throw std::invalid_argument("power_iter: v0 size");
  const double n0 = v0.norm();
  if (!(n0 > 0.0)) throw std::invalid_argument("power_iter: v0 is zero");

  SingularTriple<Scalar> t;
  t.v = v0 / n0;
  for (int i = 0; i < iterations; ++i) {
    VectorX<Scalar> u = op.apply(t.v);
    const double un = u.norm();
    if (un == 0.0) break;
    u /= un;
    VectorX<Scalar> v = op.adjoint(u);
    const double vn = v.norm();
    if (vn == 0.0) break;
    t.v = v / vn;
  }
  VectorX<Scalar> p = op.apply(t.v);
  const double pn = p.norm();
  if (!std::isfinite(pn)) throw NumericError("power_iter: non-finite iterate");
  t.sigma2 = pn * pn;
  if (pn > 0.0) {
    t.u = p / pn;
  } else {
    t.u = VectorX<Scalar>::Zero(op.rows);
    t.u[0] = Scalar(1);
  }
  return t;
}

/// Exact top triple of a dense matrix; `degenerate` is set when the two
/// largest squared singular values agree to 1e-10 relative.
SingularTriple<double> top_triple(const Eigen::MatrixXd& w);

struct Sigma2Gradient {
  Eigen::MatrixXd grad;
  bool degenerate = false;
};

/// d sigma_max^2 / dW = 2 sigma u v^T for the supplied (current) triple.
Sigma2Gradient sigma2_grad(const Eigen::MatrixXd& w,
                           const SingularTriple<double>& triple);

/// Per-frequency-bin result of the FFT spectrum computation.
struct ConvSpectrum {
  double sigma2 = 0.0;
  Index bin_row = 0;
  Index bin_col = 0;
  bool degenerate = false;
};

/// Squared spectral norm of the linearized periodic convolution, computed
/// from the 2-D DFT of the stride-phase slices of the zero-padded kernel.
/// Requires the stride to divide h and w.
ConvSpectrum conv_spectrum(const Array<double>& kernel, Index h, Index w,
                           Index stride);

inline double conv_top_sigma2(const Array<double>& kernel, Index h, Index w,
                              Index stride) {
  return conv_spectrum(kernel, h, w, stride).sigma2;
}

/// Largest number of entries conv_linearize will materialize.
inline constexpr Index kMaxLinearizedEntries = 1'000'000;

/// Explicit matrix K with vec(conv2d_periodic(X)) = K vec(X), assembled
/// column by column from basis images.
Eigen::MatrixXd conv_linearize(const Array<double>& kernel, Index h, Index w,
                               Index stride);

/// Kernel gradient of sigma_max^2 of the conv operator: 2 sigma times the
/// correlation of u against the input patches of v.
KernelMatrix conv_sigma2_grad(const ConvSpec& spec,
                              const SingularTriple<double>& triple);

}  // namespace specguard
