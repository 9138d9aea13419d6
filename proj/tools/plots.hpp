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

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace specguard::cli {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws std::runtime_error when absent.
  size_t column(const std::string& name) const;
  std::vector<double> numbers(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Bare SVG primitives.
std::string boxplot_svg(const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                        const std::string& title, const std::string& ylabel);
std::string lines_svg(const std::vector<Series>& series, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel, bool log_y = false);
std::string heatmap_svg(const Eigen::MatrixXd& values, double x_min, double x_max, double y_min,
                        double y_max, const std::string& title);

// Figures rebuilt from logged CSV files only.
struct LabeledCsv {
  std::string label;
  std::filesystem::path path;
};

void plot_distance_boxplot(const std::vector<LabeledCsv>& attack_csvs,
                           const std::filesystem::path& out);
void plot_threshold_curves(const std::vector<LabeledCsv>& attack_csvs,
                           const std::vector<double>& thresholds,
                           const std::filesystem::path& out);
void plot_volume_heatmap(const std::filesystem::path& grid_csv, const std::filesystem::path& out);
void plot_alignment(const std::filesystem::path& trajectory_csv, const std::filesystem::path& out);
void plot_weight_norms(const std::filesystem::path& train_log_csv, const std::filesystem::path& out);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace specguard::cli
