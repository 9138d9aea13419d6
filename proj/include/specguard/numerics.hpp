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

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace specguard {

using Index = Eigen::Index;
using Complex = std::complex<double>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Raised when an iterative numeric routine produces non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major n-dimensional array. The flattening order is the one used
/// everywhere images and kernels are vectorized: the last index varies
/// fastest.
template <typename Scalar>
class Array {
 public:
  using Shape = std::vector<Index>;

  Array() = default;

  explicit Array(Shape shape) : shape_(std::move(shape)) {
    data_ = VectorX<Scalar>::Zero(product(shape_));
  }

  Array(Shape shape, VectorX<Scalar> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != product(shape_)) {
      throw std::invalid_argument("Array: data length does not match shape");
    }
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index size() const { return data_.size(); }
  Index dim(Index axis) const { return shape_.at(static_cast<size_t>(axis)); }

  const VectorX<Scalar>& data() const { return data_; }
  VectorX<Scalar>& data() { return data_; }

  template <typename... I>
  Scalar& operator()(I... idx) {
    return data_[offset({static_cast<Index>(idx)...})];
  }
  template <typename... I>
  const Scalar& operator()(I... idx) const {
    return data_[offset({static_cast<Index>(idx)...})];
  }

  Index offset(std::initializer_list<Index> idx) const {
    if (static_cast<Index>(idx.size()) != rank()) {
      throw std::invalid_argument("Array: index rank mismatch");
    }
    Index off = 0;
    size_t axis = 0;
    for (Index i : idx) {
      off = off * shape_[axis] + i;
      ++axis;
    }
    return off;
  }

  static Index product(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), Index{1},
                           [](Index a, Index b) { return a * b; });
  }

 private:
  Shape shape_;
  VectorX<Scalar> data_;
};

/// xoshiro256** generator seeded through splitmix64.
///
/// All derived draws (uniform doubles, bounded integers, normals) are computed
/// here rather than through <random> distributions, whose algorithms are
/// implementation-defined, so a seed reproduces the same sequence on every
/// standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n), unbiased.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via the Marsaglia polar method.
  double normal();

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Fisher-Yates permutation of 0..n-1 driven by `rng`.
std::vector<Index> permutation(Index n, Rng& rng);

Array<double> gaussian(Rng& rng, const Array<double>::Shape& shape,
                       double mean, double std);
Eigen::MatrixXd gaussian_matrix(Rng& rng, Index rows, Index cols, double mean,
                                double std);
Eigen::VectorXd gaussian_vector(Rng& rng, Index n, double mean, double std);
/// Uniformly distributed direction on the unit sphere in R^n.
Eigen::VectorXd random_unit_vector(Rng& rng, Index n);

// --- Fourier transforms -----------------------------------------------------

/// In-place unnormalized 1-D DFT of arbitrary length (radix-2 when the length
/// is a power of two, Bluestein otherwise). `inverse` flips the exponent sign
/// and applies no scaling.
void fft_inplace(std::vector<Complex>& a, bool inverse);

/// Forward unnormalized 2-D DFT; rows are the first axis.
Eigen::MatrixXcd fft2(const Eigen::MatrixXcd& grid);
/// Inverse of fft2 (scaled by 1/(rows*cols)).
Eigen::MatrixXcd ifft2(const Eigen::MatrixXcd& grid);

// --- Small dense SVD --------------------------------------------------------

struct TopSingular {
  double sigma = 0.0;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  /// Second largest singular value (0 for rank-one shapes).
  double sigma_next = 0.0;
};

/// Exact top singular triple of a small real matrix.
TopSingular svd_top(const Eigen::MatrixXd& m);

/// All singular values, descending.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& m);

inline bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  return m.allFinite();
}

}  // namespace specguard
