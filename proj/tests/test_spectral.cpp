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

#include <doctest.h>

#include <cmath>

#include "specguard/spectral.hpp"
#include "test_util.hpp"

using namespace specguard;
using specguard::testing::numeric_gradient;
using specguard::testing::rel_err;

namespace {

Eigen::MatrixXd orthogonal(Rng& rng, Index n) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(rng, n, n, 0.0, 1.0));
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

// Matrix with prescribed singular values.
Eigen::MatrixXd with_spectrum(Rng& rng, const Eigen::VectorXd& s) {
  const Index n = s.size();
  return orthogonal(rng, n) * s.asDiagonal() * orthogonal(rng, n).transpose();
}

Array<double> random_kernel(Rng& rng, Index c_out, Index c_in, Index k) {
  return gaussian(rng, {c_out, c_in, k, k}, 0.0, 1.0);
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("power iteration on identity converges in one step") {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(5, 5);
  Rng rng(1);
  const auto t = power_iter_sigma2(dense_operator(id), gaussian_vector(rng, 5, 0.0, 1.0), 1);
  CHECK(t.sigma2 == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("power iteration on diag(2,1) follows the closed-form recurrence") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
  m(0, 0) = 2.0;
  m(1, 1) = 1.0;
  Eigen::VectorXd v0(2);
  v0 << 1.0, 1.0;
  v0 /= std::sqrt(2.0);
  for (int n : {1, 2, 5, 10}) {
    // v_n is proportional to (4^n, 1) after n rounds.
    const double a = std::pow(4.0, n);
    const double expected = (4.0 * a * a + 1.0) / (a * a + 1.0);
    const auto t = power_iter_sigma2(dense_operator(m), v0, n);
    CHECK(t.sigma2 == doctest::Approx(expected).epsilon(1e-14));
    CHECK(t.u.norm() == doctest::Approx(1.0));
    CHECK(t.v.norm() == doctest::Approx(1.0));
  }
  const auto t10 = power_iter_sigma2(dense_operator(m), v0, 10);
  CHECK(std::abs(t10.sigma2 - 4.0) < 1e-6);
}

TEST_CASE("power iteration argument checks and zero operator") {
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 4);
  const auto t = power_iter_sigma2(dense_operator(z), Eigen::VectorXd::Ones(4), 3);
  CHECK(t.sigma2 == 0.0);
  CHECK(t.u.norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(power_iter_sigma2(dense_operator(z), Eigen::VectorXd::Ones(4), 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(power_iter_sigma2(dense_operator(z), Eigen::VectorXd::Zero(4), 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(power_iter_sigma2(dense_operator(z), Eigen::VectorXd::Ones(3), 2),
                  std::invalid_argument);
}

TEST_CASE("power iteration converges and warm starts on 64x64 matrices") {
  Rng rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd s(64);
    s[0] = 3.0;
    for (Index i = 1; i < 64; ++i) s[i] = 2.7 * rng.uniform();
    s[1] = 2.7;
    const Eigen::MatrixXd w = with_spectrum(rng, s);
    const double exact = std::pow(svd_top(w).sigma, 2);
    const auto t = power_iter_sigma2(dense_operator(w), gaussian_vector(rng, 64, 0.0, 1.0), 200);
    CHECK(std::abs(t.sigma2 - exact) <= 1e-6 * exact);

    Eigen::MatrixXd dw = gaussian_matrix(rng, 64, 64, 0.0, 1.0);
    dw *= 1e-3 * svd_top(w).sigma / svd_top(dw).sigma;
    const Eigen::MatrixXd w2 = w + dw;
    const double exact2 = std::pow(svd_top(w2).sigma, 2);
    const auto warm = power_iter_sigma2(dense_operator(w2), t.v, 3);
    CHECK(std::abs(warm.sigma2 - exact2) <= 1e-6 * exact2);
  }
}

TEST_CASE("warm-started power iteration is monotone on a fixed operator") {
  Rng rng(5);
  const Eigen::MatrixXd w = gaussian_matrix(rng, 10, 7, 0.0, 1.0);
  auto t = power_iter_sigma2(dense_operator(w), gaussian_vector(rng, 7, 0.0, 1.0), 1);
  for (int call = 0; call < 20; ++call) {
    const auto next = power_iter_sigma2(dense_operator(w), t.v, 1);
    CHECK(next.sigma2 >= t.sigma2 * (1.0 - 1e-14));
    t = next;
  }
}

TEST_CASE("conv spectrum closed forms") {
  Array<double> one({1, 1, 1, 1});
  one(0, 0, 0, 0) = 1.0;
  for (Index n : {3, 4, 6}) CHECK(conv_top_sigma2(one, n, n, 1) == doctest::Approx(1.0));

  Array<double> ones({1, 1, 2, 2});
  ones.data().setOnes();
  CHECK(conv_top_sigma2(ones, 4, 4, 1) == doctest::Approx(16.0));
}

TEST_CASE("conv spectrum matches the explicit linearization") {
  Rng rng(2);
  const Array<double> kernel = random_kernel(rng, 2, 3, 3);
  const double via_fft = conv_top_sigma2(kernel, 6, 6, 2);
  const double exact = std::pow(svd_top(conv_linearize(kernel, 6, 6, 2)).sigma, 2);
  CHECK(std::abs(via_fft - exact) <= 1e-8 * exact);

  for (int trial = 0; trial < 40; ++trial) {
    const Index c_out = 1 + static_cast<Index>(rng.uniform_index(3));
    const Index c_in = 1 + static_cast<Index>(rng.uniform_index(3));
    const Index k = 1 + static_cast<Index>(rng.uniform_index(3));
    const Index n = 4 + 2 * static_cast<Index>(rng.uniform_index(3));
    const Index s = 1 + static_cast<Index>(rng.uniform_index(2));
    const Array<double> ker = random_kernel(rng, c_out, c_in, k);
    const double a = conv_top_sigma2(ker, n, n, s);
    const double b = std::pow(svd_top(conv_linearize(ker, n, n, s)).sigma, 2);
    CHECK(std::abs(a - b) <= 1e-8 * b);
  }
}

TEST_CASE("conv spectrum on rectangular images and scale equivariance") {
  Rng rng(8);
  const Array<double> ker = random_kernel(rng, 2, 2, 3);
  const double a = conv_top_sigma2(ker, 4, 6, 2);
  const double b = std::pow(svd_top(conv_linearize(ker, 4, 6, 2)).sigma, 2);
  CHECK(std::abs(a - b) <= 1e-8 * b);

  Array<double> scaled = ker;
  scaled.data() *= -1.7;
  CHECK(conv_top_sigma2(scaled, 4, 6, 2) == doctest::Approx(1.7 * 1.7 * a).epsilon(1e-12));
}

TEST_CASE("conv spectrum rejects unsupported geometry") {
  Rng rng(9);
  CHECK_THROWS_AS(conv_top_sigma2(random_kernel(rng, 1, 1, 5), 4, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(conv_top_sigma2(random_kernel(rng, 1, 1, 3), 5, 5, 2), std::invalid_argument);
}

TEST_CASE("conv_linearize closed forms and direct convolution") {
  Array<double> one({1, 1, 1, 1});
  one(0, 0, 0, 0) = 1.0;
  CHECK(conv_linearize(one, 3, 4, 1).isIdentity(0.0));

  Array<double> shift({1, 1, 2, 2});
  shift(0, 0, 0, 1) = 1.0;
  const Eigen::MatrixXd p = conv_linearize(shift, 4, 4, 1);
  CHECK((p.rowwise().sum().array() == 1.0).all());
  CHECK((p.colwise().sum().array() == 1.0).all());
  CHECK((p.array() * (1.0 - p.array())).abs().maxCoeff() == 0.0);
  // Y[p, q] = X[p, q + 1].
  CHECK(p(0, 1) == 1.0);
  CHECK(p(3, 0) == 1.0);

  Rng rng(10);
  const Array<double> ker = random_kernel(rng, 3, 2, 3);
  const Eigen::MatrixXd m = conv_linearize(ker, 6, 6, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const Array<double> x = gaussian(rng, {2, 6, 6}, 0.0, 1.0);
    const Array<double> y = conv2d_periodic(x, ker, 2);
    CHECK(y.shape() == Array<double>::Shape{3, 3, 3});
    CHECK((m * x.data() - y.data()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("conv_linearize enforces the size cap") {
  Rng rng(1);
  CHECK_THROWS_AS(conv_linearize(random_kernel(rng, 3, 3, 3), 64, 64, 1), std::invalid_argument);
}

TEST_CASE("sigma2_grad closed forms") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 2);
  w(0, 0) = 3.0;
  w(1, 1) = 1.0;
  const Sigma2Gradient g = sigma2_grad(w, top_triple(w));
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(2, 2);
  expected(0, 0) = 6.0;
  CHECK((g.grad - expected).norm() < 1e-12);
  CHECK_FALSE(g.degenerate);

  const Eigen::MatrixXd tie = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  Rng rng(3);
  const auto t = power_iter_sigma2(dense_operator(tie), gaussian_vector(rng, 2, 0.0, 1.0), 5);
  const SingularTriple<double> exact = top_triple(tie);
  CHECK(exact.degenerate);
  const Sigma2Gradient gt = sigma2_grad(tie, t);
  CHECK((gt.grad - 4.0 * t.u * t.u.transpose()).norm() < 1e-12);
}

TEST_CASE("sigma2_grad matches finite differences") {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd w = gaussian_matrix(rng, 6, 4, 0.0, 1.0);
    const Eigen::MatrixXd analytic = sigma2_grad(w, top_triple(w)).grad;
    const Eigen::MatrixXd fd = numeric_gradient(
        [](const Eigen::MatrixXd& m) { return std::pow(svd_top(m).sigma, 2); }, w);
    CHECK(rel_err(analytic, fd) < 1e-4);
  }
}

TEST_CASE("conv operator gradient matches finite differences of the FFT spectrum") {
  Rng rng(6);
  for (Index s : {1, 2}) {
    const ConvSpec spec{2, 2, 3, s, 4, 4};
    const KernelMatrix k = gaussian_matrix(rng, spec.c_out, spec.kernel_cols(), 0.0, 1.0);
    const auto t = power_iter_sigma2(conv_operator(spec, k),
                                     gaussian_vector(rng, spec.in_size(), 0.0, 1.0), 500);
    const KernelMatrix analytic = conv_sigma2_grad(spec, t);
    const Eigen::MatrixXd fd = numeric_gradient(
        [&](const Eigen::MatrixXd& m) {
          return conv_top_sigma2(kernel_array(spec, m), spec.h, spec.w, spec.stride);
        },
        k);
    CHECK(rel_err(analytic, fd) < 1e-4);
  }
}

TEST_CASE("conv operator 1x1 kernel gradient") {
  const ConvSpec spec{1, 1, 1, 1, 3, 3};
  KernelMatrix k(1, 1);
  k(0, 0) = -1.5;
  const auto t = power_iter_sigma2(conv_operator(spec, k), Eigen::VectorXd::Ones(9), 3);
  CHECK(t.sigma2 == doctest::Approx(2.25));
  CHECK(conv_sigma2_grad(spec, t)(0, 0) == doctest::Approx(2.0 * -1.5));
}

TEST_CASE("conv operator adjoint is the transpose") {
  Rng rng(12);
  const ConvSpec spec{3, 2, 3, 2, 6, 4};
  const KernelMatrix k = gaussian_matrix(rng, 3, spec.kernel_cols(), 0.0, 1.0);
  const auto op = conv_operator(spec, k);
  const Eigen::VectorXd x = gaussian_vector(rng, spec.in_size(), 0.0, 1.0);
  const Eigen::VectorXd y = gaussian_vector(rng, spec.out_size(), 0.0, 1.0);
  CHECK(op.apply(x).dot(y) == doctest::Approx(x.dot(op.adjoint(y))).epsilon(1e-12));
}

}  // TEST_SUITE
