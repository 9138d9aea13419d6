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

#include "plots.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "specguard/attack.hpp"

namespace specguard::cli {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

double parse_number(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan" || s == "-nan" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size())
    throw std::runtime_error("csv: not a number: '" + s + "'");
  return v;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Canvas {
  std::ostringstream svg;
  double x0, x1, y0, y1;  // data ranges
  bool log_y = false;

  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const {
    const double t = log_y ? (std::log10(y) - std::log10(y0)) / (std::log10(y1) - std::log10(y0))
                           : (y - y0) / (y1 - y0);
    return kHeight - kBottom - t * (kHeight - kTop - kBottom);
  }

  void open(const std::string& title) {
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(title) << "</text>\n";
  }

  void axes(const std::string& xlabel, const std::string& ylabel, bool x_ticks = true) {
    const double l = kLeft, r = kWidth - kRight, t = kTop, b = kHeight - kBottom;
    svg << "<rect x=\"" << l << "\" y=\"" << t << "\" width=\"" << r - l << "\" height=\""
        << b - t << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double y = log_y ? std::pow(10.0, std::log10(y0) + i * (std::log10(y1) - std::log10(y0)) / 4)
                             : y0 + i * (y1 - y0) / 4;
      svg << "<text x=\"" << l - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << num(y)
          << "</text>\n";
      if (x_ticks) {
        const double x = x0 + i * (x1 - x0) / 4;
        svg << "<text x=\"" << px(x) << "\" y=\"" << b + 16 << "\" text-anchor=\"middle\">"
            << num(x) << "</text>\n";
      }
    }
    svg << "<text x=\"" << (l + r) / 2 << "\" y=\"" << kHeight - 18
        << "\" text-anchor=\"middle\">" << escape(xlabel) << "</text>\n"
        << "<text transform=\"translate(18," << (t + b) / 2
        << ") rotate(-90)\" text-anchor=\"middle\">" << escape(ylabel) << "</text>\n";
  }

  std::string close() {
    svg << "</svg>\n";
    return svg.str();
  }
};

void pad_range(double& lo, double& hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double m = 0.05 * (hi - lo);
  lo -= m;
  hi += m;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const size_t i = static_cast<size_t>(pos);
  const double f = pos - static_cast<double>(i);
  return i + 1 < v.size() ? v[i] * (1 - f) + v[i + 1] * f : v[i];
}

std::vector<double> finite_deltas(const std::filesystem::path& path) {
  std::vector<double> out;
  for (double d : read_csv(path).numbers("delta"))
    if (std::isfinite(d)) out.push_back(d);
  return out;
}

}  // namespace

size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::runtime_error("csv: missing column '" + name + "'");
  return static_cast<size_t>(it - header.begin());
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
  const size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(parse_number(c < row.size() ? row[c] : ""));
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw std::runtime_error("csv: '" + path.string() + "' is empty");
  return t;
}

std::string boxplot_svg(const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                        const std::string& title, const std::string& ylabel) {
  Canvas c;
  c.x0 = 0.0;
  c.x1 = static_cast<double>(std::max<size_t>(groups.size(), 1));
  c.y0 = std::numeric_limits<double>::infinity();
  c.y1 = -c.y0;
  for (const auto& g : groups)
    for (double v : g.second) {
      c.y0 = std::min(c.y0, v);
      c.y1 = std::max(c.y1, v);
    }
  pad_range(c.y0, c.y1);
  c.open(title);
  c.axes("", ylabel, false);
  for (size_t i = 0; i < groups.size(); ++i) {
    const auto& [label, values] = groups[i];
    const double mid = c.px(static_cast<double>(i) + 0.5);
    const double half = 0.25 * (c.px(1.0) - c.px(0.0));
    c.svg << "<text x=\"" << mid << "\" y=\"" << kHeight - kBottom + 16
          << "\" text-anchor=\"middle\">" << escape(label) << "</text>\n";
    if (values.empty()) continue;
    const double q1 = quantile(values, 0.25), med = quantile(values, 0.5),
                 q3 = quantile(values, 0.75);
    const double iqr = q3 - q1;
    double lo = q3, hi = q1;
    for (double v : values) {
      if (v >= q1 - 1.5 * iqr) lo = std::min(lo, v);
      if (v <= q3 + 1.5 * iqr) hi = std::max(hi, v);
    }
    const char* color = kPalette[i % 8];
    c.svg << "<line x1=\"" << mid << "\" x2=\"" << mid << "\" y1=\"" << c.py(lo) << "\" y2=\""
          << c.py(hi) << "\" stroke=\"black\"/>\n"
          << "<rect x=\"" << mid - half << "\" y=\"" << c.py(q3) << "\" width=\"" << 2 * half
          << "\" height=\"" << std::max(c.py(q1) - c.py(q3), 0.5) << "\" fill=\"" << color
          << "\" fill-opacity=\"0.5\" stroke=\"black\"/>\n"
          << "<line x1=\"" << mid - half << "\" x2=\"" << mid + half << "\" y1=\"" << c.py(med)
          << "\" y2=\"" << c.py(med) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    for (double v : values) {
      if (v < q1 - 1.5 * iqr || v > q3 + 1.5 * iqr) {
        c.svg << "<circle cx=\"" << mid << "\" cy=\"" << c.py(v)
              << "\" r=\"2.5\" fill=\"none\" stroke=\"black\"/>\n";
      }
    }
  }
  return c.close();
}

std::string lines_svg(const std::vector<Series>& series, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel, bool log_y) {
  Canvas c;
  c.log_y = log_y;
  c.x0 = c.y0 = std::numeric_limits<double>::infinity();
  c.x1 = c.y1 = -c.x0;
  for (const Series& s : series) {
    for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0.0)) continue;
      c.x0 = std::min(c.x0, s.x[i]);
      c.x1 = std::max(c.x1, s.x[i]);
      c.y0 = std::min(c.y0, s.y[i]);
      c.y1 = std::max(c.y1, s.y[i]);
    }
  }
  if (!std::isfinite(c.x0) || c.x1 <= c.x0) {
    c.x0 = std::isfinite(c.x0) ? c.x0 - 0.5 : 0.0;
    c.x1 = c.x0 + 1.0;
  }
  if (log_y) {
    if (!std::isfinite(c.y0)) {
      c.y0 = 1.0;
      c.y1 = 10.0;
    }
    if (c.y1 <= c.y0 * 1.0001) {
      c.y0 /= 2.0;
      c.y1 *= 2.0;
    }
  } else {
    pad_range(c.y0, c.y1);
  }
  c.open(title);
  c.axes(xlabel, ylabel);
  for (size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    std::ostringstream path;
    bool pen_down = false;
    for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0.0)) {
        pen_down = false;
        continue;
      }
      path << (pen_down ? " L" : " M") << c.px(s.x[i]) << ' ' << c.py(s.y[i]);
      pen_down = true;
    }
    const char* color = kPalette[k % 8];
    c.svg << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\"/>\n"
          << "<line x1=\"" << kWidth - kRight + 10 << "\" x2=\"" << kWidth - kRight + 30
          << "\" y1=\"" << kTop + 10 + 18 * k << "\" y2=\"" << kTop + 10 + 18 * k
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
          << "<text x=\"" << kWidth - kRight + 35 << "\" y=\"" << kTop + 14 + 18 * k << "\">"
          << escape(s.label) << "</text>\n";
  }
  return c.close();
}

std::string heatmap_svg(const Eigen::MatrixXd& values, double x_min, double x_max, double y_min,
                        double y_max, const std::string& title) {
  Canvas c;
  c.x0 = x_min;
  c.x1 = x_max;
  c.y0 = y_min;
  c.y1 = y_max;
  c.open(title);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Index i = 0; i < values.size(); ++i) {
    const double v = values.data()[i];
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) hi = lo + 1.0;
  const double cw = (c.px(x_max) - c.px(x_min)) / static_cast<double>(values.cols());
  const double ch = (c.py(y_min) - c.py(y_max)) / static_cast<double>(values.rows());
  // Row 0 is the lowest y.
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      const double t = std::isfinite(values(i, j)) ? (values(i, j) - lo) / (hi - lo) : 0.0;
      const int r = static_cast<int>(255 * std::clamp(1.5 * t, 0.0, 1.0));
      const int g = static_cast<int>(255 * std::clamp(1.5 * t - 0.5, 0.0, 1.0));
      const int b = static_cast<int>(255 * std::clamp(0.4 + t, 0.0, 1.0) * (1.0 - t));
      char fill[8];
      std::snprintf(fill, sizeof fill, "#%02x%02x%02x", r, g, b);
      c.svg << "<rect x=\"" << c.px(x_min) + j * cw << "\" y=\""
            << c.py(y_min) - (i + 1) * ch << "\" width=\"" << cw + 0.3 << "\" height=\""
            << ch + 0.3 << "\" fill=\"" << fill << "\"/>\n";
    }
  }
  c.axes("x1", "x2");
  c.svg << "<text x=\"" << kWidth - kRight + 10 << "\" y=\"" << kTop + 14 << "\">max " << num(hi)
        << "</text>\n<text x=\"" << kWidth - kRight + 10 << "\" y=\"" << kTop + 32 << "\">min "
        << num(lo) << "</text>\n";
  return c.close();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

void plot_distance_boxplot(const std::vector<LabeledCsv>& attack_csvs,
                           const std::filesystem::path& out) {
  std::vector<std::pair<std::string, std::vector<double>>> groups;
  for (const LabeledCsv& c : attack_csvs) groups.emplace_back(c.label, finite_deltas(c.path));
  write_text(out, boxplot_svg(groups, "adversarial distance found by the tangent attack",
                              "l2 distance"));
}

void plot_threshold_curves(const std::vector<LabeledCsv>& attack_csvs,
                           const std::vector<double>& thresholds,
                           const std::filesystem::path& out) {
  std::vector<Series> series;
  for (const LabeledCsv& c : attack_csvs) {
    const RobustnessStats st = robustness_report(read_csv(c.path).numbers("delta"), thresholds);
    series.push_back({c.label, st.thresholds, st.proportion});
  }
  write_text(out, lines_svg(series, "share of points with distance above threshold",
                            "threshold", "proportion"));
}

void plot_volume_heatmap(const std::filesystem::path& grid_csv, const std::filesystem::path& out) {
  const CsvTable t = read_csv(grid_csv);
  if (t.header.size() < 2 || t.rows.empty()) throw std::runtime_error("grid csv is empty");
  const Index cols = static_cast<Index>(t.header.size() - 1);
  Eigen::MatrixXd m(static_cast<Index>(t.rows.size()), cols);
  std::vector<double> ys;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    ys.push_back(parse_number(t.rows[i].at(0)));
    for (Index j = 0; j < cols; ++j) m(static_cast<Index>(i), j) = parse_number(t.rows[i].at(j + 1));
  }
  const double x_first = parse_number(t.header[1]), x_last = parse_number(t.header.back());
  const double hx = cols > 1 ? 0.5 * (x_last - x_first) / static_cast<double>(cols - 1) : 0.5;
  const double hy = ys.size() > 1 ? 0.5 * (ys.back() - ys.front()) / static_cast<double>(ys.size() - 1) : 0.5;
  write_text(out, heatmap_svg(m, x_first - hx, x_last + hx, ys.front() - hy, ys.back() + hy,
                              "volume element sqrt(det g)"));
}

void plot_alignment(const std::filesystem::path& trajectory_csv, const std::filesystem::path& out) {
  const CsvTable t = read_csv(trajectory_csv);
  const std::vector<double> steps = t.numbers("step");
  std::vector<Series> cosines, norms;
  for (const std::string& h : t.header) {
    if (h.rfind("cos_", 0) == 0) cosines.push_back({"class " + h.substr(4), steps, t.numbers(h)});
    if (h.rfind("norm_", 0) == 0) norms.push_back({"class " + h.substr(5), steps, t.numbers(h)});
  }
  std::filesystem::path norm_out = out;
  norm_out.replace_filename(out.stem().string() + "_norm.svg");
  write_text(out, lines_svg(cosines, "alignment of readout rows with the frame", "step",
                            "cos(w_k, z_k)"));
  write_text(norm_out, lines_svg(norms, "readout row norms", "step", "|w_k|", true));
}

void plot_weight_norms(const std::filesystem::path& train_log_csv, const std::filesystem::path& out) {
  const CsvTable t = read_csv(train_log_csv);
  const std::vector<double> epochs = t.numbers("epoch");
  std::vector<Series> series;
  for (const std::string& h : t.header) {
    if (h.rfind("sigma2_", 0) != 0) continue;
    std::vector<double> s = t.numbers(h);
    for (double& v : s) v = std::sqrt(v);
    series.push_back({"layer " + h.substr(7), epochs, std::move(s)});
  }
  write_text(out, lines_svg(series, "largest singular value per weight layer", "epoch",
                            "sigma_max", true));
}

}  // namespace specguard::cli
