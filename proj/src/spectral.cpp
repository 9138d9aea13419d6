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

#include "specguard/spectral.hpp"

#include <Eigen/Eigenvalues>

namespace specguard {

namespace {

constexpr double kDegenerateRel = 1e-10;

}  // namespace

LinearOperator<double> conv_operator(const ConvSpec& spec, KernelMatrix kernel) {
  spec.validate();
  auto shared = std::make_shared<const KernelMatrix>(std::move(kernel));
  return {spec.out_size(), spec.in_size(),
          [spec, shared](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            return conv_apply(spec, *shared, x);
          },
          [spec, shared](const Eigen::VectorXd& y) -> Eigen::VectorXd {
            return conv_adjoint(spec, *shared, y);
          }};
}

SingularTriple<double> top_triple(const Eigen::MatrixXd& w) {
  const TopSingular top = svd_top(w);
  SingularTriple<double> t;
  t.sigma2 = top.sigma * top.sigma;
  t.u = top.u;
  t.v = top.v;
  const double next2 = top.sigma_next * top.sigma_next;
  t.degenerate = t.sigma2 > 0.0 && (t.sigma2 - next2) < kDegenerateRel * t.sigma2;
  return t;
}

Sigma2Gradient sigma2_grad(const Eigen::MatrixXd& w,
                           const SingularTriple<double>& triple) {
  if (triple.u.size() != w.rows() || triple.v.size() != w.cols()) {
    throw std::invalid_argument("sigma2_grad: triple does not match W");
  }
  return {2.0 * triple.sigma() * triple.u * triple.v.transpose(), triple.degenerate};
}

ConvSpectrum conv_spectrum(const Array<double>& kernel, Index h, Index w,
                           Index stride) {
  const ConvSpec spec = conv_spec_for(kernel, h, w, stride);
  if (!spec.stride_divides()) {
    throw std::invalid_argument(
        "conv_top_sigma2: stride must divide the image height and width");
  }
  const Index s = stride;
  const Index sh = h / s, sw = w / s;
  const Index phases = s * s;
  const Index cols = spec.c_in * phases;

  // transforms[o][i * phases + phase] = fft2 of the phase slice of the padded
  // kernel. Entries beyond the kernel support are zero.
  std::vector<Eigen::MatrixXcd> transforms(static_cast<size_t>(spec.c_out * cols));
  for (Index o = 0; o < spec.c_out; ++o) {
    for (Index i = 0; i < spec.c_in; ++i) {
      for (Index pi = 0; pi < s; ++pi) {
        for (Index pj = 0; pj < s; ++pj) {
          Eigen::MatrixXcd slice = Eigen::MatrixXcd::Zero(sh, sw);
          for (Index a = pi; a < spec.k; a += s)
            for (Index b = pj; b < spec.k; b += s)
              slice(a / s, b / s) = kernel(o, i, a, b);
          transforms[static_cast<size_t>(o * cols + i * phases + pi * s + pj)] =
              fft2(slice);
        }
      }
    }
  }

  ConvSpectrum best;
  best.sigma2 = -1.0;
  Eigen::MatrixXcd p(spec.c_out, cols);
  for (Index r = 0; r < sh; ++r) {
    for (Index c = 0; c < sw; ++c) {
      for (Index o = 0; o < spec.c_out; ++o)
        for (Index j = 0; j < cols; ++j)
          p(o, j) = transforms[static_cast<size_t>(o * cols + j)](r, c);
      // Gram matrix on the smaller side.
      const Eigen::MatrixXcd gram = cols > spec.c_out
                                        ? Eigen::MatrixXcd(p * p.adjoint())
                                        : Eigen::MatrixXcd(p.adjoint() * p);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram, Eigen::EigenvaluesOnly);
      const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
      const double top = ev[ev.size() - 1];
      if (top > best.sigma2) {
        best.sigma2 = top;
        best.bin_row = r;
        best.bin_col = c;
        const double next = ev.size() > 1 ? ev[ev.size() - 2] : 0.0;
        best.degenerate = top > 0.0 && (top - next) < kDegenerateRel * top;
      }
    }
  }
  best.sigma2 = std::max(best.sigma2, 0.0);
  return best;
}

Eigen::MatrixXd conv_linearize(const Array<double>& kernel, Index h, Index w,
                               Index stride) {
  const ConvSpec spec = conv_spec_for(kernel, h, w, stride);
  if (spec.out_size() * spec.in_size() > kMaxLinearizedEntries) {
    throw std::invalid_argument("conv_linearize: matrix exceeds size cap");
  }
  const KernelMatrix km = kernel_matrix(kernel);
  Eigen::MatrixXd m(spec.out_size(), spec.in_size());
  Eigen::VectorXd basis = Eigen::VectorXd::Zero(spec.in_size());
  for (Index j = 0; j < spec.in_size(); ++j) {
    basis[j] = 1.0;
    m.col(j) = conv_apply(spec, km, basis);
    basis[j] = 0.0;
  }
  return m;
}

KernelMatrix conv_sigma2_grad(const ConvSpec& spec,
                              const SingularTriple<double>& triple) {
  if (triple.u.size() != spec.out_size() || triple.v.size() != spec.in_size()) {
    throw std::invalid_argument("conv_sigma2_grad: triple does not match spec");
  }
  return 2.0 * triple.sigma() * conv_kernel_grad(spec, triple.u, triple.v);
}

}  // namespace specguard
