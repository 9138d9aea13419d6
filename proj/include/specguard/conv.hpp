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

#include "specguard/numerics.hpp"

namespace specguard {

/// Geometry of a periodic multi-channel 2-D convolution.
///
/// The layer computes, with all spatial indices taken modulo (h, w),
///
///   Y[o, p, q] = sum_{i, a, b} K[o, i, a, b] * X[i, s*p + a, s*q + b]
///
/// for p < out_h(), q < out_w(). Images and kernels are flattened row-major.
struct ConvSpec {
  Index c_out = 1;
  Index c_in = 1;
  Index k = 1;
  Index stride = 1;
  Index h = 1;
  Index w = 1;

  Index out_h() const { return (h - 1) / stride + 1; }
  Index out_w() const { return (w - 1) / stride + 1; }
  Index in_size() const { return c_in * h * w; }
  Index out_size() const { return c_out * out_h() * out_w(); }
  Index kernel_cols() const { return c_in * k * k; }

  /// Throws std::invalid_argument on inconsistent geometry.
  void validate() const;
  /// True when the stride divides both spatial dims (needed by the FFT path).
  bool stride_divides() const { return h % stride == 0 && w % stride == 0; }

  bool operator==(const ConvSpec&) const = default;
};

/// Kernel stored as a (c_out, c_in*k*k) matrix whose rows are the row-major
/// flattening of K[o, :, :, :].
using KernelMatrix = Eigen::MatrixXd;

KernelMatrix kernel_matrix(const Array<double>& kernel);
Array<double> kernel_array(const ConvSpec& spec, const KernelMatrix& kernel);
/// Builds a ConvSpec from a (c_out, c_in, k, k) array and image geometry.
ConvSpec conv_spec_for(const Array<double>& kernel, Index h, Index w, Index stride);

/// Flat forward: x has length in_size(), result has length out_size().
Eigen::VectorXd conv_apply(const ConvSpec& spec, const KernelMatrix& kernel,
                           const Eigen::Ref<const Eigen::VectorXd>& x);
/// Adjoint of conv_apply with respect to x.
Eigen::VectorXd conv_adjoint(const ConvSpec& spec, const KernelMatrix& kernel,
                             const Eigen::Ref<const Eigen::VectorXd>& y);
/// d(y_bar . conv_apply(x)) / dK, shaped like the kernel matrix.
KernelMatrix conv_kernel_grad(const ConvSpec& spec,
                              const Eigen::Ref<const Eigen::VectorXd>& y_bar,
                              const Eigen::Ref<const Eigen::VectorXd>& x);

/// Periodic convolution on an image array of shape (c_in, h, w); returns
/// (c_out, out_h, out_w).
Array<double> conv2d_periodic(const Array<double>& image,
                              const Array<double>& kernel, Index stride);

}  // namespace specguard
