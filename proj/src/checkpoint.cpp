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

#include "specguard/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace specguard {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "specguard-net";
constexpr int kVersion = 1;

json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double to_double(const json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  throw std::invalid_argument("checkpoint: bad number " + s);
}

json row_major(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) a.push_back(number(m(r, c)));
  return a;
}

Eigen::MatrixXd matrix_from(const json& a, Index rows, Index cols) {
  if (!a.is_array() || static_cast<Index>(a.size()) != rows * cols) {
    throw std::invalid_argument("checkpoint: weight array has the wrong length");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = to_double(a[static_cast<size_t>(r * cols + c)]);
  return m;
}

Eigen::VectorXd vector_from(const json& a) {
  if (!a.is_array()) throw std::invalid_argument("checkpoint: bias must be an array");
  Eigen::VectorXd v(static_cast<Index>(a.size()));
  for (size_t i = 0; i < a.size(); ++i) v[static_cast<Index>(i)] = to_double(a[i]);
  return v;
}

json dense_json(const DenseLayer& d) {
  return {{"kind", "dense"},
          {"out", d.out_dim()},
          {"in", d.in_dim()},
          {"weight", row_major(d.weight)},
          {"bias", row_major(d.bias.transpose())}};
}

DenseLayer dense_from(const json& j) {
  DenseLayer d;
  d.weight = matrix_from(j.at("weight"), j.at("out").get<Index>(), j.at("in").get<Index>());
  d.bias = vector_from(j.at("bias"));
  return d;
}

}  // namespace

std::string net_to_json(const Net& net, const std::string& meta_json) {
  json layers = json::array();
  for (const Layer& layer : net.features) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      layers.push_back(dense_json(*d));
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      layers.push_back({{"kind", "conv2d-periodic"},
                        {"c_out", c->spec.c_out},
                        {"c_in", c->spec.c_in},
                        {"k", c->spec.k},
                        {"stride", c->spec.stride},
                        {"h", c->spec.h},
                        {"w", c->spec.w},
                        {"weight", row_major(c->weight)},
                        {"bias", row_major(c->bias.transpose())}});
    } else {
      layers.push_back({{"kind", "activation"},
                        {"fn", to_string(std::get<ActivationLayer>(layer).fn)}});
    }
  }
  json doc = {{"format", kFormat},
              {"version", kVersion},
              {"input_dim", net.input_dim},
              {"features", layers},
              {"readout", dense_json(net.readout)},
              {"meta", json::parse(meta_json)}};
  return doc.dump(1);
}

Net net_from_json(const std::string& text) {
  const json doc = json::parse(text);
  if (doc.value("format", "") != kFormat) throw std::invalid_argument("checkpoint: not a specguard net");
  const int version = doc.at("version").get<int>();
  if (version != kVersion) {
    throw std::invalid_argument("checkpoint: unsupported version " + std::to_string(version));
  }
  Net net;
  net.input_dim = doc.at("input_dim").get<Index>();
  for (const json& j : doc.at("features")) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "dense") {
      net.features.emplace_back(dense_from(j));
    } else if (kind == "conv2d-periodic") {
      ConvLayer c;
      c.spec = ConvSpec{j.at("c_out").get<Index>(), j.at("c_in").get<Index>(),
                        j.at("k").get<Index>(),     j.at("stride").get<Index>(),
                        j.at("h").get<Index>(),     j.at("w").get<Index>()};
      c.spec.validate();
      c.weight = matrix_from(j.at("weight"), c.spec.c_out, c.spec.kernel_cols());
      c.bias = vector_from(j.at("bias"));
      net.features.emplace_back(std::move(c));
    } else if (kind == "activation") {
      net.features.emplace_back(ActivationLayer{parse_activation(j.at("fn").get<std::string>())});
    } else {
      throw std::invalid_argument("checkpoint: unknown layer kind " + kind);
    }
  }
  net.readout = dense_from(doc.at("readout"));
  net.validate();
  return net;
}

void save_net(const Net& net, const std::filesystem::path& path, const std::string& meta_json) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << net_to_json(net, meta_json) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Net load_net(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return net_from_json(ss.str());
}

}  // namespace specguard
