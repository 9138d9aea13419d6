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

#include "specguard/numerics.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SVD>

namespace specguard {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

bool is_power_of_two(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_radix2(std::vector<Complex>& a, bool inverse) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (size_t len = 2; len <= n; len <<= 1) {
    const size_t half = len / 2;
    // Twiddles computed directly per index; repeated multiplication drifts.
    std::vector<Complex> tw(half);
    for (size_t k = 0; k < half; ++k) {
      const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(len);
      tw[k] = Complex(std::cos(ang), std::sin(ang));
    }
    for (size_t i = 0; i < n; i += len) {
      for (size_t k = 0; k < half; ++k) {
        const Complex t = tw[k] * a[i + k + half];
        a[i + k + half] = a[i + k] - t;
        a[i + k] += t;
      }
    }
  }
}

void fft_bluestein(std::vector<Complex>& a, bool inverse) {
  const size_t n = a.size();
  size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<Complex> chirp(n);
  for (size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument small.
    const std::uint64_t kk = (static_cast<std::uint64_t>(k) * k) % (2 * n);
    const double ang =
        sign * std::numbers::pi * static_cast<double>(kk) / static_cast<double>(n);
    chirp[k] = Complex(std::cos(ang), std::sin(ang));
  }
  std::vector<Complex> x(m, Complex(0.0, 0.0));
  std::vector<Complex> y(m, Complex(0.0, 0.0));
  for (size_t k = 0; k < n; ++k) x[k] = a[k] * chirp[k];
  y[0] = std::conj(chirp[0]);
  for (size_t k = 1; k < n; ++k) {
    y[k] = std::conj(chirp[k]);
    y[m - k] = std::conj(chirp[k]);
  }
  fft_radix2(x, false);
  fft_radix2(y, false);
  for (size_t i = 0; i < m; ++i) x[i] *= y[i];
  fft_radix2(x, true);
  const double scale = 1.0 / static_cast<double>(m);
  for (size_t k = 0; k < n; ++k) a[k] = x[k] * scale * chirp[k];
}

Eigen::MatrixXcd fft2_impl(const Eigen::MatrixXcd& grid, bool inverse) {
  if (grid.rows() == 0 || grid.cols() == 0) {
    throw std::invalid_argument("fft2: empty grid");
  }
  Eigen::MatrixXcd out = grid;
  std::vector<Complex> buf;
  buf.resize(static_cast<size_t>(out.cols()));
  for (Index r = 0; r < out.rows(); ++r) {
    for (Index c = 0; c < out.cols(); ++c) buf[static_cast<size_t>(c)] = out(r, c);
    fft_inplace(buf, inverse);
    for (Index c = 0; c < out.cols(); ++c) out(r, c) = buf[static_cast<size_t>(c)];
  }
  buf.resize(static_cast<size_t>(out.rows()));
  for (Index c = 0; c < out.cols(); ++c) {
    for (Index r = 0; r < out.rows(); ++r) buf[static_cast<size_t>(r)] = out(r, c);
    fft_inplace(buf, inverse);
    for (Index r = 0; r < out.rows(); ++r) out(r, c) = buf[static_cast<size_t>(r)];
  }
  return out;
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed) {
  std::uint64_t x = seed ^ (stream * 0xD1B54A32D192ED03ULL);
  for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  // Rejection on the top of the range removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r >= limit);
  return r % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

std::vector<Index> permutation(Index n, Rng& rng) {
  std::vector<Index> p(static_cast<size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(i + 1)));
    std::swap(p[static_cast<size_t>(i)], p[static_cast<size_t>(j)]);
  }
  return p;
}

Array<double> gaussian(Rng& rng, const Array<double>::Shape& shape, double mean,
                       double std) {
  if (!(std >= 0.0)) throw std::invalid_argument("gaussian: negative std");
  Array<double> out(shape);
  for (Index i = 0; i < out.size(); ++i) out.data()[i] = mean + std * rng.normal();
  return out;
}

Eigen::MatrixXd gaussian_matrix(Rng& rng, Index rows, Index cols, double mean,
                                double std) {
  if (!(std >= 0.0)) throw std::invalid_argument("gaussian: negative std");
  Eigen::MatrixXd m(rows, cols);
  // Fill in row-major order so the draw sequence matches Array flattening.
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = mean + std * rng.normal();
  return m;
}

Eigen::VectorXd gaussian_vector(Rng& rng, Index n, double mean, double std) {
  if (!(std >= 0.0)) throw std::invalid_argument("gaussian: negative std");
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = mean + std * rng.normal();
  return v;
}

Eigen::VectorXd random_unit_vector(Rng& rng, Index n) {
  Eigen::VectorXd v;
  do {
    v = gaussian_vector(rng, n, 0.0, 1.0);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

void fft_inplace(std::vector<Complex>& a, bool inverse) {
  if (a.empty()) throw std::invalid_argument("fft: empty input");
  if (a.size() == 1) return;
  if (is_power_of_two(a.size())) {
    fft_radix2(a, inverse);
  } else {
    fft_bluestein(a, inverse);
  }
}

Eigen::MatrixXcd fft2(const Eigen::MatrixXcd& grid) { return fft2_impl(grid, false); }

Eigen::MatrixXcd ifft2(const Eigen::MatrixXcd& grid) {
  Eigen::MatrixXcd out = fft2_impl(grid, true);
  out /= static_cast<double>(grid.rows() * grid.cols());
  return out;
}

TopSingular svd_top(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw std::invalid_argument("svd_top: empty matrix");
  }
  if (!m.allFinite()) throw std::invalid_argument("svd_top: non-finite entries");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  TopSingular top;
  const auto& s = svd.singularValues();
  top.sigma = s[0];
  top.sigma_next = s.size() > 1 ? s[1] : 0.0;
  top.u = svd.matrixU().col(0);
  top.v = svd.matrixV().col(0);
  return top;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) {
    throw std::invalid_argument("singular_values: non-finite entries");
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues();
}

}  // namespace specguard
