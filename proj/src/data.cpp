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

#include "specguard/data.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace specguard {

namespace {

constexpr char kCacheMagic[4] = {'S', 'G', 'D', 'S'};
constexpr std::uint32_t kCacheVersion = 1;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::uint64_t at,
                        const std::string& what) {
  if (at + 4 > buf.size()) throw FormatError(what + ": truncated header", buf.size());
  return (std::uint32_t{buf[at]} << 24) | (std::uint32_t{buf[at + 1]} << 16) |
         (std::uint32_t{buf[at + 2]} << 8) | std::uint32_t{buf[at + 3]};
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
  }
  void bytes(const void* p, size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void finish() {
    out_.flush();
    if (!out_) throw std::runtime_error("write failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(std::vector<unsigned char> buf) : buf_(std::move(buf)) {}
  void need(std::uint64_t n) {
    if (pos_ + n > buf_.size()) throw FormatError("dataset cache truncated", pos_);
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{buf_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint64_t pos() const { return pos_; }
  const std::vector<unsigned char>& buf() const { return buf_; }
  void skip(std::uint64_t n) {
    need(n);
    pos_ += n;
  }

 private:
  std::vector<unsigned char> buf_;
  std::uint64_t pos_ = 0;
};

}  // namespace

void Dataset::validate() const {
  if (static_cast<Index>(labels.size()) != inputs.cols()) {
    throw std::invalid_argument("dataset: label count does not match sample count");
  }
  if (classes < 1) throw std::invalid_argument("dataset: classes must be positive");
  for (int y : labels) {
    if (y < 0 || y >= classes) throw std::invalid_argument("dataset: label out of range");
  }
  if (!sample_shape.empty() && Array<double>::product(sample_shape) != inputs.rows()) {
    throw std::invalid_argument("dataset: sample_shape does not match input dimension");
  }
}

Dataset Dataset::select(const std::vector<Index>& indices) const {
  Dataset out;
  out.classes = classes;
  out.split = split;
  out.norm = norm;
  out.sample_shape = sample_shape;
  out.inputs.resize(inputs.rows(), static_cast<Index>(indices.size()));
  out.labels.reserve(indices.size());
  for (size_t j = 0; j < indices.size(); ++j) {
    const Index i = indices[j];
    if (i < 0 || i >= size()) throw std::invalid_argument("dataset: index out of range");
    out.inputs.col(static_cast<Index>(j)) = inputs.col(i);
    out.labels.push_back(labels[static_cast<size_t>(i)]);
  }
  return out;
}

Dataset xor_dataset(bool noisy, Index points_per_cluster, double noise_std, Rng& rng) {
  if (!(noise_std >= 0.0)) throw std::invalid_argument("xor: noise_std must be >= 0");
  const double corners[4][2] = {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  const Index per = noisy ? points_per_cluster : 1;
  if (per < 1) throw std::invalid_argument("xor: points_per_cluster must be >= 1");
  Dataset ds;
  ds.classes = 2;
  ds.sample_shape = {2};
  ds.inputs.resize(2, 4 * per);
  Index col = 0;
  for (const auto& c : corners) {
    for (Index p = 0; p < per; ++p) {
      double x = c[0], y = c[1];
      if (noisy) {
        x += noise_std * rng.normal();
        y += noise_std * rng.normal();
      }
      ds.inputs(0, col) = x;
      ds.inputs(1, col) = y;
      ds.labels.push_back(c[0] * c[1] < 0.0 ? 1 : 0);
      ++col;
    }
  }
  ds.norm.value_min = std::min(-1.0, ds.inputs.minCoeff());
  ds.norm.value_max = std::max(1.0, ds.inputs.maxCoeff());
  return ds;
}

Dataset load_mnist_idx(const std::filesystem::path& image_path,
                       const std::filesystem::path& label_path) {
  const std::vector<unsigned char> img = read_file(image_path);
  const std::vector<unsigned char> lab = read_file(label_path);

  const std::uint32_t magic_img = read_be32(img, 0, "images");
  if (magic_img != 0x00000803u) throw FormatError("images: bad magic number", 0);
  const std::uint64_t n = read_be32(img, 4, "images");
  const std::uint64_t rows = read_be32(img, 8, "images");
  const std::uint64_t cols = read_be32(img, 12, "images");
  if (rows == 0 || cols == 0) throw FormatError("images: zero image dimension", 8);
  const std::uint64_t pixels = rows * cols;
  if (img.size() < 16 + n * pixels) throw FormatError("images: truncated pixel data", img.size());
  if (img.size() > 16 + n * pixels) throw FormatError("images: trailing bytes", 16 + n * pixels);

  const std::uint32_t magic_lab = read_be32(lab, 0, "labels");
  if (magic_lab != 0x00000801u) throw FormatError("labels: bad magic number", 0);
  const std::uint64_t nl = read_be32(lab, 4, "labels");
  if (nl != n) throw FormatError("labels: count does not match images", 4);
  if (lab.size() < 8 + n) throw FormatError("labels: truncated label data", lab.size());
  if (lab.size() > 8 + n) throw FormatError("labels: trailing bytes", 8 + n);

  Dataset ds;
  ds.classes = 10;
  ds.sample_shape = {1, static_cast<Index>(rows), static_cast<Index>(cols)};
  ds.norm.scale = 1.0 / 255.0;
  ds.norm.value_min = 0.0;
  ds.norm.value_max = 1.0;
  ds.norm.unit = "pixel/255";
  ds.inputs.resize(static_cast<Index>(pixels), static_cast<Index>(n));
  ds.labels.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const unsigned char* src = img.data() + 16 + i * pixels;
    for (std::uint64_t p = 0; p < pixels; ++p) {
      ds.inputs(static_cast<Index>(p), static_cast<Index>(i)) = src[p] / 255.0;
    }
    const unsigned char y = lab[8 + i];
    if (y > 9) throw FormatError("labels: label outside [0, 9]", 8 + i);
    ds.labels[i] = y;
  }
  return ds;
}

std::optional<MnistFiles> find_mnist(const std::filesystem::path& root) {
  for (const auto& dir : {root / "mnist", root}) {
    MnistFiles f{dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte",
                 dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte"};
    if (std::filesystem::exists(f.train_images) && std::filesystem::exists(f.train_labels) &&
        std::filesystem::exists(f.test_images) && std::filesystem::exists(f.test_labels)) {
      return f;
    }
  }
  return std::nullopt;
}

Dataset subset_sample(const Dataset& ds, Index m, bool stratified, Rng& rng) {
  if (m < 0 || m > ds.size()) throw std::invalid_argument("subset_sample: m exceeds dataset size");
  std::vector<Index> chosen;
  chosen.reserve(static_cast<size_t>(m));
  if (!stratified) {
    const std::vector<Index> perm = permutation(ds.size(), rng);
    chosen.assign(perm.begin(), perm.begin() + m);
    return ds.select(chosen);
  }

  std::vector<std::vector<Index>> by_class(static_cast<size_t>(ds.classes));
  for (Index i = 0; i < ds.size(); ++i) by_class[static_cast<size_t>(ds.labels[static_cast<size_t>(i)])].push_back(i);

  // Largest-remainder apportionment; ties go to the lower class index.
  const double total = static_cast<double>(ds.size());
  std::vector<Index> quota(by_class.size());
  std::vector<std::pair<double, size_t>> remainders;
  Index assigned = 0;
  for (size_t k = 0; k < by_class.size(); ++k) {
    const double exact = static_cast<double>(m) * static_cast<double>(by_class[k].size()) / total;
    quota[k] = static_cast<Index>(exact);
    assigned += quota[k];
    remainders.emplace_back(exact - static_cast<double>(quota[k]), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t r = 0; assigned < m; ++r) {
    const size_t k = remainders[r % remainders.size()].second;
    if (quota[k] < static_cast<Index>(by_class[k].size())) {
      ++quota[k];
      ++assigned;
    }
  }

  for (size_t k = 0; k < by_class.size(); ++k) {
    const std::vector<Index> perm = permutation(static_cast<Index>(by_class[k].size()), rng);
    for (Index j = 0; j < quota[k]; ++j) chosen.push_back(by_class[k][static_cast<size_t>(perm[static_cast<size_t>(j)])]);
  }
  const std::vector<Index> order = permutation(m, rng);
  std::vector<Index> shuffled(static_cast<size_t>(m));
  for (Index j = 0; j < m; ++j) shuffled[static_cast<size_t>(j)] = chosen[static_cast<size_t>(order[static_cast<size_t>(j)])];
  return ds.select(shuffled);
}

Eigen::VectorXd feature_mean(const Dataset& ds) {
  if (ds.size() == 0) throw std::invalid_argument("feature_mean: empty dataset");
  return ds.inputs.rowwise().mean();
}

void center(Dataset& ds, const Eigen::VectorXd& mean) {
  if (mean.size() != ds.dim()) throw std::invalid_argument("center: mean dimension mismatch");
  if (ds.norm.centered) throw std::invalid_argument("center: dataset already centered");
  ds.inputs.colwise() -= mean;
  ds.norm.centered = true;
  ds.norm.mean = mean;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  ds.validate();
  Writer w(path);
  w.bytes(kCacheMagic, 4);
  w.u64(kCacheVersion);
  w.i64(ds.classes);
  w.str(ds.split);
  w.u64(ds.sample_shape.size());
  for (Index d : ds.sample_shape) w.i64(d);
  w.f64(ds.norm.scale);
  w.u64(ds.norm.centered ? 1 : 0);
  w.u64(static_cast<std::uint64_t>(ds.norm.mean.size()));
  for (Index i = 0; i < ds.norm.mean.size(); ++i) w.f64(ds.norm.mean[i]);
  w.f64(ds.norm.value_min);
  w.f64(ds.norm.value_max);
  w.str(ds.norm.unit);
  w.u64(static_cast<std::uint64_t>(ds.inputs.rows()));
  w.u64(static_cast<std::uint64_t>(ds.inputs.cols()));
  for (Index i = 0; i < ds.inputs.size(); ++i) w.f64(ds.inputs.data()[i]);
  for (int y : ds.labels) w.i64(y);
  w.finish();
}

Dataset load_dataset(const std::filesystem::path& path) {
  Reader r(read_file(path));
  r.need(4);
  if (std::memcmp(r.buf().data(), kCacheMagic, 4) != 0) throw FormatError("dataset cache: bad magic", 0);
  r.skip(4);
  const std::uint64_t version = r.u64();
  if (version != kCacheVersion) {
    throw FormatError("dataset cache: unsupported version " + std::to_string(version), 4);
  }
  Dataset ds;
  ds.classes = static_cast<int>(r.i64());
  ds.split = r.str();
  const std::uint64_t rank = r.u64();
  r.need(rank * 8);
  for (std::uint64_t i = 0; i < rank; ++i) ds.sample_shape.push_back(r.i64());
  ds.norm.scale = r.f64();
  ds.norm.centered = r.u64() != 0;
  const std::uint64_t mean_n = r.u64();
  r.need(mean_n * 8);
  ds.norm.mean.resize(static_cast<Index>(mean_n));
  for (std::uint64_t i = 0; i < mean_n; ++i) ds.norm.mean[static_cast<Index>(i)] = r.f64();
  ds.norm.value_min = r.f64();
  ds.norm.value_max = r.f64();
  ds.norm.unit = r.str();
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  r.need(rows * cols * 8 + cols * 8);
  ds.inputs.resize(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < ds.inputs.size(); ++i) ds.inputs.data()[i] = r.f64();
  ds.labels.resize(cols);
  for (auto& y : ds.labels) y = static_cast<int>(r.i64());
  if (r.pos() != r.buf().size()) throw FormatError("dataset cache: trailing bytes", r.pos());
  ds.validate();
  return ds;
}

}  // namespace specguard
