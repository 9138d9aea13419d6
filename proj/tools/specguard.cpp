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

// specguard command-line runner.
//
//   specguard <subcommand> (--config FILE | --preset NAME) [--seed N] [--resume] [--out DIR]
//
// Exit status: 0 success, 1 I/O or data error, 2 configuration error,
// 3 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>

#include "config.hpp"
#include "plots.hpp"
#include "specguard/checkpoint.hpp"
#include "specguard/data.hpp"
#include "specguard/etf.hpp"
#include "specguard/regularize.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace specguard;
using namespace specguard::cli;

namespace {

std::mutex g_log_mutex;

void log(const std::string& line) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  std::cout << line << std::endl;
}

struct RunOptions {
  std::string config_path;
  std::string preset;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  bool resume = false;
  std::string out;
  int jobs = 1;
  std::vector<std::string> compare;
};

struct Context {
  ExperimentConfig cfg;
  fs::path run_dir;
  RunOptions opts;

  fs::path seed_dir(std::uint64_t seed) const { return run_dir / ("seed-" + std::to_string(seed)); }
};

Context resolve(const RunOptions& opts, const std::string& subcommand) {
  Context ctx;
  ctx.opts = opts;
  std::string text;
  std::string origin;
  if (!opts.preset.empty()) {
    const fs::path path = fs::path(SPECGUARD_PRESET_DIR) / (opts.preset + ".ini");
    if (!fs::exists(path)) throw ConfigError("unknown preset '" + opts.preset + "'");
    origin = path.string();
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  } else if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) throw ConfigError("cannot read config file '" + opts.config_path + "'");
    origin = opts.config_path;
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  for (const std::string& o : opts.overrides) {
    parse_config(o, "--set");  // reports bad overrides against their own origin
    text += "\n" + o;
  }
  ctx.cfg = parse_config(text, origin.empty() ? "<overrides>" : origin);
  if (opts.seed) ctx.cfg.seeds = {*opts.seed};
  ctx.cfg.validate();
  ctx.run_dir = opts.out.empty() ? ctx.cfg.out_dir / ctx.cfg.name : fs::path(opts.out);
  fs::create_directories(ctx.run_dir);
  write_text(ctx.run_dir / ("resolved-" + subcommand + ".ini"), echo_config(ctx.cfg));
  return ctx;
}

// --- data ---------------------------------------------------------------------

struct Data {
  Dataset train;
  std::optional<Dataset> test;
};

Data load_data(const ExperimentConfig& cfg) {
  Data d;
  Rng rng(cfg.data.data_seed);
  if (cfg.data.source == "xor") {
    d.train = xor_dataset(false, 1, 0.0, rng);
    return d;
  }
  if (cfg.data.source == "xor-noisy") {
    d.train = xor_dataset(true, cfg.data.points_per_cluster, cfg.data.noise_std, rng);
    Rng test_rng(cfg.data.data_seed, 1);
    d.test = xor_dataset(true, cfg.data.points_per_cluster, cfg.data.noise_std, test_rng);
    d.test->split = "test";
    return d;
  }
  std::string root = cfg.data.dir;
  if (root.empty()) {
    const char* env = std::getenv("SPECGUARD_DATA_DIR");
    if (env) root = env;
  }
  if (root.empty()) throw ConfigError("data.dir: not set and SPECGUARD_DATA_DIR is empty");
  const auto files = find_mnist(root);
  if (!files) throw ConfigError("data.dir: no MNIST IDX files under '" + root + "'");
  Dataset full = load_mnist_idx(files->train_images, files->train_labels);
  d.train = cfg.data.train_size > 0 && cfg.data.train_size < full.size()
                ? subset_sample(full, cfg.data.train_size, cfg.data.stratified, rng)
                : std::move(full);
  d.test = load_mnist_idx(files->test_images, files->test_labels);
  d.test->split = "test";
  if (cfg.data.center) {
    const Eigen::VectorXd mean = feature_mean(d.train);
    center(d.train, mean);
    center(*d.test, mean);
  }
  return d;
}

// --- per-seed fan out ---------------------------------------------------------

template <typename Fn>
void for_each_seed(const Context& ctx, Fn fn) {
  const auto& seeds = ctx.cfg.seeds;
  if (ctx.opts.jobs <= 1) {
    for (std::uint64_t s : seeds) fn(s);
    return;
  }
  // Each worker writes only to its own seed directory.
  size_t next = 0;
  while (next < seeds.size()) {
    std::vector<std::future<void>> batch;
    for (int j = 0; j < ctx.opts.jobs && next < seeds.size(); ++j, ++next) {
      batch.push_back(std::async(std::launch::async, fn, seeds[next]));
    }
    for (auto& f : batch) f.get();
  }
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json sigma_json(const Net& net) {
  json out = json::array();
  for (double s2 : weight_layer_sigma2(net)) out.push_back(std::sqrt(s2));
  return out;
}


json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// --- train ----------------------------------------------------------------------

int cmd_train(const Context& ctx) {
  const Data data = load_data(ctx.cfg);
  log("train: " + std::to_string(data.train.size()) + " samples, dim " +
      std::to_string(data.train.dim()) + ", " + std::to_string(data.train.classes) + " classes");
  for_each_seed(ctx, [&](std::uint64_t seed) {
    const fs::path dir = ctx.seed_dir(seed);
    if (ctx.opts.resume && fs::exists(dir / "summary.json") && fs::exists(dir / "model.json")) {
      log("seed " + std::to_string(seed) + ": already complete, skipped");
      return;
    }
    fs::create_directories(dir);
    Rng init(seed);
    Net net = make_mlp(data.train.dim(), ctx.cfg.model.hidden, data.train.classes,
                       ctx.cfg.model.activation, ctx.cfg.model.readout_bias, ctx.cfg.model.init, init);
    TrainConfig tc = ctx.cfg.train;
    tc.seed = seed;
    const json meta = {{"seed", seed}, {"run", ctx.cfg.name}, {"reg_mode", to_string(tc.reg.mode)}};
    TrainLog tlog;
    try {
      tlog = train_supervised(net, data.train, tc, data.test ? &*data.test : nullptr);
    } catch (const DivergenceError& e) {
      save_net(e.snapshot(), dir / "model_diverged.json", meta.dump());
      throw;
    }
    {
      std::ofstream out(dir / "train_log.csv");
      tlog.write_csv(out);
    }
    save_net(net, dir / "model.json", meta.dump());
    if (tlog.burn_in_snapshot) save_net(*tlog.burn_in_snapshot, dir / "model_burn_in.json", meta.dump());
    const EpochRecord& last = tlog.epochs.empty() ? tlog.initial : tlog.epochs.back();
    json summary = {{"seed", seed},
                    {"epochs", tc.epochs},
                    {"reg_mode", to_string(tc.reg.mode)},
                    {"final_loss", number(last.loss)},
                    {"final_penalty", number(last.penalty)},
                    {"train_accuracy", accuracy(net, data.train)},
                    {"test_accuracy", data.test ? json(accuracy(net, *data.test)) : json(nullptr)},
                    {"sigma_max", sigma_json(net)}};
    write_json(dir / "summary.json", summary);
    if (tc.log_sigma2) plot_weight_norms(dir / "train_log.csv", dir / "weight_norms.svg");
    log("seed " + std::to_string(seed) + ": train acc " +
        std::to_string(summary["train_accuracy"].get<double>()) + ", wrote " + dir.string());
  });
  return 0;
}

// --- attack ---------------------------------------------------------------------

struct AttackTarget {
  std::string label;
  fs::path model;
  fs::path out_dir;
  std::uint64_t seed = 0;
};

std::vector<AttackTarget> attack_targets(const Context& ctx) {
  std::vector<AttackTarget> out;
  if (!ctx.cfg.attack.checkpoints.empty()) {
    for (size_t i = 0; i < ctx.cfg.attack.checkpoints.size(); ++i) {
      const fs::path model = ctx.cfg.attack.checkpoints[i];
      std::string label = model.parent_path().filename().string();
      if (label.empty()) label = model.stem().string();
      for (const AttackTarget& t : out)
        if (t.label == label) label += "-" + std::to_string(i);
      out.push_back({label, model, ctx.run_dir / "attack" / label, ctx.cfg.seeds.front()});
    }
    return out;
  }
  for (std::uint64_t seed : ctx.cfg.seeds) {
    const fs::path dir = ctx.seed_dir(seed);
    out.push_back({"seed-" + std::to_string(seed), dir / ctx.cfg.attack.model, dir, seed});
  }
  return out;
}

std::string attack_csv_name(const ExperimentConfig& cfg) {
  return cfg.attack.model == "model.json" ? "attack.csv"
                                          : "attack_" + fs::path(cfg.attack.model).stem().string() + ".csv";
}

json stats_json(const RobustnessStats& st) {
  json prop = json::array();
  for (size_t i = 0; i < st.thresholds.size(); ++i)
    prop.push_back({{"threshold", st.thresholds[i]}, {"proportion", st.proportion[i]}});
  return {{"count", st.count}, {"mean", number(st.mean)}, {"std", number(st.stddev)},
          {"min", number(st.min)}, {"q1", number(st.q1)}, {"median", number(st.median)},
          {"q3", number(st.q3)}, {"max", number(st.max)}, {"thresholds", prop}};
}

int cmd_attack(const Context& ctx) {
  const Data data = load_data(ctx.cfg);
  const Dataset& pool = ctx.cfg.attack.split == "test" && data.test ? *data.test : data.train;
  const std::vector<AttackTarget> targets = attack_targets(ctx);
  const std::string csv_name = attack_csv_name(ctx.cfg);
  for (const AttackTarget& t : targets) {
    if (!fs::exists(t.model)) throw ConfigError("attack: missing checkpoint '" + t.model.string() + "'");
  }
  std::vector<LabeledCsv> csvs;
  for (const AttackTarget& t : targets) csvs.push_back({t.label, t.out_dir / csv_name});

  auto run_one = [&](const AttackTarget& t) {
    const fs::path csv = t.out_dir / csv_name;
    if (ctx.opts.resume && fs::exists(csv)) {
      log(t.label + ": attack results present, skipped");
      return;
    }
    const Net net = load_net(t.model);
    if (net.input_dim != pool.dim()) throw ConfigError("attack: checkpoint input size does not match the data");
    std::vector<AttackRow> rows;
    for (Index i = 0; i < pool.size(); ++i) {
      if (ctx.cfg.attack.samples > 0 && static_cast<Index>(rows.size()) >= ctx.cfg.attack.samples) break;
      const Eigen::VectorXd x = pool.inputs.col(i);
      const int y = pool.labels[static_cast<size_t>(i)];
      if (predict(net, x) != y) continue;
      DecisionOracle oracle = net_oracle(net);
      Rng rng(t.seed, static_cast<std::uint64_t>(i));
      const AttackResult r = tangent_attack(oracle, x, y, ctx.cfg.attack.cfg, rng);
      rows.push_back({i, y, r.adv_label, r.delta, r.queries});
    }
    fs::create_directories(t.out_dir);
    std::ofstream out(csv);
    write_attack_csv(out, rows);
    out.close();
    std::vector<double> deltas;
    for (const AttackRow& r : rows) deltas.push_back(r.delta);
    const RobustnessStats st = robustness_report(deltas, ctx.cfg.attack.thresholds);
    json summary = stats_json(st);
    summary["checkpoint"] = t.model.string();
    summary["split"] = ctx.cfg.attack.split;
    write_json(t.out_dir / (fs::path(csv_name).stem().string() + "_summary.json"), summary);
    log(t.label + ": " + std::to_string(rows.size()) + " points, mean distance " +
        std::to_string(st.mean));
  };

  if (ctx.opts.jobs <= 1) {
    for (const AttackTarget& t : targets) run_one(t);
  } else {
    std::vector<std::future<void>> futures;
    for (const AttackTarget& t : targets) futures.push_back(std::async(std::launch::async, run_one, t));
    for (auto& f : futures) f.get();
  }

  json report = json::array();
  for (const LabeledCsv& c : csvs) {
    const std::vector<double> deltas = read_csv(c.path).numbers("delta");
    const RobustnessStats st = robustness_report(deltas, ctx.cfg.attack.thresholds);
    report.push_back({{"label", c.label}, {"mean", number(st.mean)}, {"std", number(st.stddev)},
                      {"count", st.count}});
  }
  write_json(ctx.run_dir / "attack_report.json", report);
  plot_distance_boxplot(csvs, ctx.run_dir / "attack_distances.svg");
  plot_threshold_curves(csvs, ctx.cfg.attack.thresholds, ctx.run_dir / "attack_thresholds.svg");
  return 0;
}

// --- geometry -------------------------------------------------------------------

void write_grid_csv(const fs::path& path, const Eigen::MatrixXd& grid, const Rect& rect) {
  std::ofstream out(path);
  out.precision(17);
  const double dx = (rect.x_max - rect.x_min) / static_cast<double>(grid.cols());
  const double dy = (rect.y_max - rect.y_min) / static_cast<double>(grid.rows());
  out << "y";
  for (Index j = 0; j < grid.cols(); ++j) out << ',' << rect.x_min + (j + 0.5) * dx;
  out << '\n';
  for (Index i = 0; i < grid.rows(); ++i) {
    out << rect.y_min + (i + 0.5) * dy;
    for (Index j = 0; j < grid.cols(); ++j) out << ',' << grid(i, j);
    out << '\n';
  }
}

int cmd_geometry(const Context& ctx) {
  const Data data = load_data(ctx.cfg);
  for_each_seed(ctx, [&](std::uint64_t seed) {
    const fs::path dir = ctx.seed_dir(seed);
    const fs::path model = dir / ctx.cfg.attack.model;
    if (!fs::exists(model)) throw ConfigError("geometry: missing checkpoint '" + model.string() + "'");
    if (ctx.opts.resume && fs::exists(dir / "geometry.csv")) {
      log("seed " + std::to_string(seed) + ": geometry present, skipped");
      return;
    }
    const Net net = load_net(model);
    Rng rng(seed, 3);
    GeometryOptions go;
    go.radius = ctx.cfg.geometry.radius;
    go.samples = ctx.cfg.geometry.samples;
    std::ofstream csv(dir / "geometry.csv");
    csv.precision(17);
    csv << "sample,label,c,k,theta_x,feat_norm,lambda_max,bound_local,bound_ball,bound_certified\n";
    const Index limit = ctx.cfg.attack.samples > 0 ? std::min(ctx.cfg.attack.samples, data.train.size())
                                                   : data.train.size();
    for (Index i = 0; i < limit; ++i) {
      const Eigen::VectorXd x = data.train.inputs.col(i);
      const int c = predict(net, x);
      const GeometryReport r = geometry_report(net, x, c, std::nullopt, go, rng);
      csv << i << ',' << data.train.labels[static_cast<size_t>(i)] << ',' << r.c << ',' << r.k << ','
          << r.theta_x << ',' << r.feat_norm << ',' << r.lambda_max_g << ',' << r.bound_local << ','
          << (r.bound_ball ? *r.bound_ball : std::nan("")) << ',' << r.bound_certified << '\n';
    }
    csv.close();
    json summary = {{"seed", seed}, {"points", limit}};
    if (net.input_dim == 2) {
      const Index res = ctx.cfg.geometry.resolution;
      const Eigen::MatrixXd grid = volume_element_grid(net, ctx.cfg.geometry.rect, res, res);
      write_grid_csv(dir / "volume_grid.csv", grid, ctx.cfg.geometry.rect);
      plot_volume_heatmap(dir / "volume_grid.csv", dir / "volume.svg");
      summary["mean_volume_element"] = grid.mean();
    }
    write_json(dir / "geometry_summary.json", summary);
    log("seed " + std::to_string(seed) + ": geometry written to " + dir.string());
  });
  return 0;
}

// --- etf --------------------------------------------------------------------------

int cmd_etf(const Context& ctx) {
  const EtfSection& e = ctx.cfg.etf;
  const EtfFrame frame = make_simplex_etf(e.classes, e.dim);
  for_each_seed(ctx, [&](std::uint64_t seed) {
    const fs::path dir = ctx.seed_dir(seed);
    if (ctx.opts.resume && fs::exists(dir / "alignment.csv")) {
      log("seed " + std::to_string(seed) + ": alignment present, skipped");
      return;
    }
    fs::create_directories(dir);
    Rng rng(seed);
    const AlignmentTrajectory t = lastlayer_gd(frame, e.init_std, e.lr, e.steps, rng, e.log_every);
    {
      std::ofstream csv(dir / "alignment.csv");
      csv.precision(17);
      csv << "step";
      for (Index k = 0; k < e.classes; ++k) csv << ",cos_" << k;
      for (Index k = 0; k < e.classes; ++k) csv << ",norm_" << k;
      csv << '\n';
      for (const AlignmentStep& s : t.steps) {
        csv << s.step;
        for (Index k = 0; k < e.classes; ++k) csv << ',' << s.cosine[k];
        for (Index k = 0; k < e.classes; ++k) csv << ',' << s.norm[k];
        csv << '\n';
      }
    }
    plot_alignment(dir / "alignment.csv", dir / "alignment.svg");
    Net net;
    net.input_dim = e.dim;
    net.readout.weight = t.w;
    double theta_gap = 0.0;
    for (Index c = 0; c < e.classes; ++c)
      for (Index k = 0; k < e.classes; ++k)
        if (c != k) {
          const double emp = theta_x(net, frame.z.col(c), static_cast<int>(c), static_cast<int>(k));
          theta_gap = std::max(theta_gap, std::abs(emp - theta_x_analytic(frame, c, k)));
        }
    json summary = {{"seed", seed},
                    {"diverged", t.diverged},
                    {"final_min_cosine", t.steps.back().cosine.minCoeff()},
                    {"theta_analytic", theta_x_analytic(frame, 0, 1)},
                    {"theta_max_gap", theta_gap}};
    write_json(dir / "etf_summary.json", summary);
    log("seed " + std::to_string(seed) + ": min cosine " +
        std::to_string(t.steps.back().cosine.minCoeff()));
  });
  return 0;
}

// --- retrain-readout -------------------------------------------------------------

int cmd_retrain(const Context& ctx) {
  const Data data = load_data(ctx.cfg);
  for_each_seed(ctx, [&](std::uint64_t seed) {
    const fs::path dir = ctx.seed_dir(seed);
    if (!fs::exists(dir / "model.json")) throw ConfigError("retrain-readout: missing " + (dir / "model.json").string());
    if (ctx.opts.resume && fs::exists(dir / "model_retrained.json")) {
      log("seed " + std::to_string(seed) + ": retrained readout present, skipped");
      return;
    }
    const Net net = load_net(dir / "model.json");
    ReadoutFitOptions fo;
    fo.max_iters = ctx.cfg.retrain.max_iters;
    fo.grad_tol = ctx.cfg.retrain.grad_tol;
    const ReadoutFit fit = retrain_readout(feature_map_batch(net, data.train.inputs), data.train.labels,
                                           data.train.classes, ctx.cfg.retrain.l2, fo);
    Net retrained = net;
    retrained.readout = fit.readout;
    const json meta = {{"seed", seed}, {"run", ctx.cfg.name}, {"retrained_l2", ctx.cfg.retrain.l2}};
    save_net(retrained, dir / "model_retrained.json", meta.dump());
    json summary = {{"seed", seed},
                    {"objective", fit.objective},
                    {"grad_norm", fit.grad_norm},
                    {"iterations", fit.iterations},
                    {"converged", fit.converged},
                    {"train_accuracy_before", accuracy(net, data.train)},
                    {"train_accuracy_after", accuracy(retrained, data.train)}};
    if (data.test) {
      summary["test_accuracy_before"] = accuracy(net, *data.test);
      summary["test_accuracy_after"] = accuracy(retrained, *data.test);
    }
    write_json(dir / "retrain.json", summary);
    log("seed " + std::to_string(seed) + ": readout refit in " + std::to_string(fit.iterations) +
        " iterations" + (fit.converged ? "" : " (not converged)"));
  });
  return 0;
}

// --- report ------------------------------------------------------------------------

struct Aggregate {
  std::map<std::string, std::vector<double>> values;
  void add(const std::string& key, double v) {
    if (std::isfinite(v)) values[key].push_back(v);
  }
  json to_json() const {
    json out = json::object();
    for (const auto& [k, v] : values) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
      out[k] = {{"mean", mean}, {"std", sd}, {"n", v.size()}};
    }
    return out;
  }
};

double finite_mean(const std::vector<double>& xs) {
  double s = 0.0;
  int n = 0;
  for (double x : xs)
    if (std::isfinite(x)) {
      s += x;
      ++n;
    }
  return n ? s / n : std::nan("");
}

std::vector<fs::path> seed_dirs(const fs::path& run_dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(run_dir)) return out;
  for (const auto& entry : fs::directory_iterator(run_dir))
    if (entry.is_directory() && entry.path().filename().string().rfind("seed-", 0) == 0)
      out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

// Rebuilds every per-seed figure and the aggregate JSON from logged CSVs.
json report_run(const fs::path& run_dir, const ExperimentConfig& cfg, std::vector<LabeledCsv>& attack_csvs) {
  Aggregate agg;
  json per_seed = json::object();
  const std::string csv_name = attack_csv_name(cfg);
  for (const fs::path& dir : seed_dirs(run_dir)) {
    json row = json::object();
    if (fs::exists(dir / "train_log.csv")) {
      const CsvTable t = read_csv(dir / "train_log.csv");

      for (const std::string& col : t.header) {
        if (col == "epoch" || col.rfind("theta_", 0) == 0 || col.rfind("featnorm_", 0) == 0) continue;
        const double v = t.numbers(col).back();
        const std::string key = col.rfind("sigma2_", 0) == 0 ? "final_sigma_max_" + col.substr(7) : "final_" + col;
        const double value = col.rfind("sigma2_", 0) == 0 ? std::sqrt(v) : v;
        agg.add(key, value);
        row[key] = number(value);
      }

      if (std::find_if(t.header.begin(), t.header.end(),
                       [](const std::string& h) { return h.rfind("sigma2_", 0) == 0; }) != t.header.end())
        plot_weight_norms(dir / "train_log.csv", dir / "weight_norms.svg");
    }
    if (fs::exists(dir / csv_name)) {
      const double m = finite_mean(read_csv(dir / csv_name).numbers("delta"));
      agg.add("mean_attack_distance", m);
      row["mean_attack_distance"] = number(m);
      attack_csvs.push_back({dir.filename().string(), dir / csv_name});
    }
    if (fs::exists(dir / "geometry.csv")) {
      const CsvTable g = read_csv(dir / "geometry.csv");
      const double m = finite_mean(g.numbers("bound_certified"));
      agg.add("mean_certified_bound", m);
      row["mean_certified_bound"] = number(m);
    }
    if (fs::exists(dir / "volume_grid.csv")) {
      plot_volume_heatmap(dir / "volume_grid.csv", dir / "volume.svg");
      const CsvTable g = read_csv(dir / "volume_grid.csv");
      std::vector<double> all;
      for (size_t c = 1; c < g.header.size(); ++c) {
        const std::vector<double> col = g.numbers(g.header[c]);
        all.insert(all.end(), col.begin(), col.end());
      }
      const double m = finite_mean(all);
      agg.add("mean_volume_element", m);
      row["mean_volume_element"] = number(m);
    }
    if (fs::exists(dir / "alignment.csv")) {
      plot_alignment(dir / "alignment.csv", dir / "alignment.svg");
      const CsvTable a = read_csv(dir / "alignment.csv");
      double worst = 1.0;
      for (const std::string& h : a.header)
        if (h.rfind("cos_", 0) == 0) worst = std::min(worst, a.numbers(h).back());
      agg.add("final_min_cosine", worst);
      row["final_min_cosine"] = worst;
    }
    per_seed[dir.filename().string()] = row;
  }
  return {{"run", run_dir.string()}, {"aggregate", agg.to_json()}, {"per_seed", per_seed}};
}

int cmd_report(const Context& ctx) {
  std::vector<LabeledCsv> own;
  json report = report_run(ctx.run_dir, ctx.cfg, own);
  if (own.empty() && report["per_seed"].empty()) {
    throw ConfigError("report: no seed directories under '" + ctx.run_dir.string() + "'");
  }
  if (!own.empty()) {
    plot_distance_boxplot(own, ctx.run_dir / "attack_distances.svg");
    plot_threshold_curves(own, ctx.cfg.attack.thresholds, ctx.run_dir / "attack_thresholds.svg");
  }
  if (!ctx.opts.compare.empty()) {
    // One group per run directory, pooling its seeds.
    std::vector<std::pair<std::string, std::vector<double>>> groups;
    std::vector<Series> curves;
    json runs = json::array();
    for (const std::string& other : ctx.opts.compare) {
      std::vector<LabeledCsv> csvs;
      json r = report_run(other, ctx.cfg, csvs);
      runs.push_back(r);
      std::vector<double> pooled;
      for (const LabeledCsv& c : csvs) {
        for (double d : read_csv(c.path).numbers("delta"))
          if (std::isfinite(d)) pooled.push_back(d);
      }
      const std::string label = fs::path(other).filename().string();
      const RobustnessStats st = robustness_report(pooled, ctx.cfg.attack.thresholds);
      curves.push_back({label, st.thresholds, st.proportion});
      groups.emplace_back(label, std::move(pooled));
    }
    report["compare"] = runs;
    write_text(ctx.run_dir / "compare_distances.svg",
               boxplot_svg(groups, "adversarial distance found by the tangent attack", "l2 distance"));
    write_text(ctx.run_dir / "compare_thresholds.svg",
               lines_svg(curves, "share of points with distance above threshold", "threshold", "proportion"));
  }
  write_json(ctx.run_dir / "report.json", report);
  std::cout << report["aggregate"].dump(2) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"specguard: spectral regularization experiments"};
  app.require_subcommand(1);
  RunOptions opts;

  auto add_common = [&](CLI::App* sub) {
    auto* cfg = sub->add_option("--config", opts.config_path, "INI config file");
    auto* preset = sub->add_option("--preset", opts.preset, "Shipped preset name");
    cfg->excludes(preset);
    sub->add_option("--set", opts.overrides, "Extra 'section.key = value' lines")->take_all();
    sub->add_option("--seed", opts.seed, "Run a single seed instead of run.seeds");
    sub->add_flag("--resume", opts.resume, "Skip work whose outputs already exist");
    sub->add_option("--out", opts.out, "Run directory (default output.dir/run.name)");
    sub->add_option("--jobs", opts.jobs, "Seeds processed in parallel")->check(CLI::PositiveNumber);
  };

  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const Context&);
  };
  const Sub subs[] = {
      {"train", "Train one model per seed; write checkpoints and logs", cmd_train},
      {"attack", "Tangent attack on trained checkpoints", cmd_attack},
      {"geometry", "Bounds, metric and volume element of trained models", cmd_geometry},
      {"etf", "Last-layer alignment on a simplex frame", cmd_etf},
      {"retrain-readout", "Refit the linear readout by regularized logistic regression", cmd_retrain},
      {"report", "Aggregate logged CSVs and regenerate figures", cmd_report},
  };
  std::vector<std::pair<CLI::App*, const Sub*>> registered;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_common(sub);
    if (std::string(s.name) == "report")
      sub->add_option("--compare", opts.compare, "Run directories compared side by side");
    registered.emplace_back(sub, &s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (const auto& [sub, s] : registered) {
    if (!sub->parsed()) continue;
    try {
      const Context ctx = resolve(opts, s->name);
      std::cout << echo_config(ctx.cfg) << std::flush;
      return s->fn(ctx);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << std::endl;
      return 2;
    } catch (const NumericError& e) {
      std::cerr << "numeric failure: " << e.what() << std::endl;
      return 3;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << std::endl;
      return 1;
    }
  }
  return 2;
}
