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

#include "specguard/conv.hpp"

namespace specguard {

void ConvSpec::validate() const {
  if (c_out < 1 || c_in < 1 || k < 1 || h < 1 || w < 1) {
    throw std::invalid_argument("ConvSpec: dimensions must be positive");
  }
  if (stride < 1) throw std::invalid_argument("ConvSpec: stride must be >= 1");
  if (k > h || k > w) {
    throw std::invalid_argument("ConvSpec: kernel larger than image");
  }
}

KernelMatrix kernel_matrix(const Array<double>& kernel) {
  if (kernel.rank() != 4 || kernel.dim(2) != kernel.dim(3)) {
    throw std::invalid_argument("kernel must have shape (c_out, c_in, k, k)");
  }
  const Index rows = kernel.dim(0);
  const Index cols = kernel.dim(1) * kernel.dim(2) * kernel.dim(3);
  KernelMatrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = kernel.data()[r * cols + c];
  return m;
}

Array<double> kernel_array(const ConvSpec& spec, const KernelMatrix& kernel) {
  Array<double> a({spec.c_out, spec.c_in, spec.k, spec.k});
  const Index cols = spec.kernel_cols();
  for (Index r = 0; r < spec.c_out; ++r)
    for (Index c = 0; c < cols; ++c) a.data()[r * cols + c] = kernel(r, c);
  return a;
}

ConvSpec conv_spec_for(const Array<double>& kernel, Index h, Index w, Index stride) {
  if (kernel.rank() != 4 || kernel.dim(2) != kernel.dim(3)) {
    throw std::invalid_argument("kernel must have shape (c_out, c_in, k, k)");
  }
  ConvSpec spec{kernel.dim(0), kernel.dim(1), kernel.dim(2), stride, h, w};
  spec.validate();
  return spec;
}

Eigen::VectorXd conv_apply(const ConvSpec& spec, const KernelMatrix& kernel,
                           const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != spec.in_size()) {
    throw std::invalid_argument("conv: input size mismatch");
  }
  const Index oh = spec.out_h(), ow = spec.out_w(), k = spec.k;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(spec.out_size());
  for (Index o = 0; o < spec.c_out; ++o) {
    for (Index p = 0; p < oh; ++p) {
      for (Index q = 0; q < ow; ++q) {
        double acc = 0.0;
        for (Index i = 0; i < spec.c_in; ++i) {
          for (Index a = 0; a < k; ++a) {
            const Index row = (spec.stride * p + a) % spec.h;
            for (Index b = 0; b < k; ++b) {
              const Index col = (spec.stride * q + b) % spec.w;
              acc += kernel(o, (i * k + a) * k + b) * x[(i * spec.h + row) * spec.w + col];
            }
          }
        }
        y[(o * oh + p) * ow + q] = acc;
      }
    }
  }
  return y;
}

Eigen::VectorXd conv_adjoint(const ConvSpec& spec, const KernelMatrix& kernel,
                             const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (y.size() != spec.out_size()) {
    throw std::invalid_argument("conv adjoint: output size mismatch");
  }
  const Index oh = spec.out_h(), ow = spec.out_w(), k = spec.k;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(spec.in_size());
  for (Index o = 0; o < spec.c_out; ++o) {
    for (Index p = 0; p < oh; ++p) {
      for (Index q = 0; q < ow; ++q) {
        const double g = y[(o * oh + p) * ow + q];
        if (g == 0.0) continue;
        for (Index i = 0; i < spec.c_in; ++i) {
          for (Index a = 0; a < k; ++a) {
            const Index row = (spec.stride * p + a) % spec.h;
            for (Index b = 0; b < k; ++b) {
              const Index col = (spec.stride * q + b) % spec.w;
              x[(i * spec.h + row) * spec.w + col] += kernel(o, (i * k + a) * k + b) * g;
            }
          }
        }
      }
    }
  }
  return x;
}

KernelMatrix conv_kernel_grad(const ConvSpec& spec,
                              const Eigen::Ref<const Eigen::VectorXd>& y_bar,
                              const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (y_bar.size() != spec.out_size() || x.size() != spec.in_size()) {
    throw std::invalid_argument("conv kernel grad: size mismatch");
  }
  const Index oh = spec.out_h(), ow = spec.out_w(), k = spec.k;
  KernelMatrix g = KernelMatrix::Zero(spec.c_out, spec.kernel_cols());
  for (Index o = 0; o < spec.c_out; ++o) {
    for (Index p = 0; p < oh; ++p) {
      for (Index q = 0; q < ow; ++q) {
        const double yb = y_bar[(o * oh + p) * ow + q];
        if (yb == 0.0) continue;
        for (Index i = 0; i < spec.c_in; ++i) {
          for (Index a = 0; a < k; ++a) {
            const Index row = (spec.stride * p + a) % spec.h;
            for (Index b = 0; b < k; ++b) {
              const Index col = (spec.stride * q + b) % spec.w;
              g(o, (i * k + a) * k + b) += yb * x[(i * spec.h + row) * spec.w + col];
            }
          }
        }
      }
    }
  }
  return g;
}

Array<double> conv2d_periodic(const Array<double>& image,
                              const Array<double>& kernel, Index stride) {
  if (image.rank() != 3) {
    throw std::invalid_argument("conv2d_periodic: image must be (c_in, h, w)");
  }
  const ConvSpec spec = conv_spec_for(kernel, image.dim(1), image.dim(2), stride);
  if (image.dim(0) != spec.c_in) {
    throw std::invalid_argument("conv2d_periodic: channel mismatch");
  }
  Eigen::VectorXd y = conv_apply(spec, kernel_matrix(kernel), image.data());
  return Array<double>({spec.c_out, spec.out_h(), spec.out_w()}, std::move(y));
}

}  // namespace specguard
