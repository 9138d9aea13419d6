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
#include <numbers>
#include <sstream>

#include "specguard/attack.hpp"

using namespace specguard;

namespace {

// Oracle for a two-class halfspace with unit normal; returns x's margin.
double margin(const Eigen::VectorXd& normal, double offset, const Eigen::VectorXd& x) {
  return std::abs(normal.dot(x) - offset) / normal.norm();
}

DecisionOracle constant_oracle(Index n, int label) {
  return DecisionOracle(
      [label](const Eigen::MatrixXd& xs) { return std::vector<int>(static_cast<size_t>(xs.cols()), label); },
      n);
}

}  // namespace

TEST_SUITE("attack") {

TEST_CASE("oracle counts every evaluated point") {
  DecisionOracle o = halfspace_oracle(Eigen::Vector2d(1.0, 0.0), 0.0);
  CHECK(o.query(Eigen::Vector2d(1.0, 0.0)) == 1);
  CHECK(o.query(Eigen::Vector2d(-1.0, 0.0)) == 0);
  CHECK(o.query_batch(Eigen::MatrixXd::Zero(2, 5)).size() == 5u);
  CHECK(o.queries() == 7);
  CHECK_THROWS_AS(o.query(Eigen::Vector3d::Zero()), std::invalid_argument);
}

TEST_CASE("bisection contract") {
  DecisionOracle o = halfspace_oracle(Eigen::VectorXd::Constant(1, 1.0), 0.0);
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(1, -1.0);
  const Eigen::VectorXd b = Eigen::VectorXd::Constant(1, 1.0);
  double prev_gap = 0.0;
  for (double tol : {1e-2, 5e-3, 2.5e-3, 1e-4, 1e-6}) {
    const BisectResult r = boundary_bisect(o, a, b, tol);
    CHECK(r.label == 1);
    CHECK(r.point[0] > 0.0);
    CHECK(r.point[0] <= 2.0 * tol);
    CHECK(r.gap <= tol * 2.0);
    const int steps = static_cast<int>(std::ceil(std::log2(1.0 / tol)));
    CHECK(r.queries == steps + 2);  // plus the two endpoint checks
    if (prev_gap > 0.0 && tol == 5e-3) CHECK(r.gap == doctest::Approx(prev_gap / 2.0));
    prev_gap = r.gap;
  }
  CHECK_THROWS_AS(boundary_bisect(o, b, b, 1e-3), std::invalid_argument);
}

TEST_CASE("initialization") {
  Rng rng(1);
  SUBCASE("close to a linear boundary") {
    const Eigen::Vector2d normal(0.6, 0.8);
    DecisionOracle o = halfspace_oracle(normal, 0.0);
    const Eigen::Vector2d x = -1e-6 * normal;
    for (double std : {0.1, 1.0}) {
      const auto init = init_adversarial(o, x, 0, 200, std, std, 1e-4, rng);
      REQUIRE(init.has_value());
      CHECK((init->point - x).norm() <= 3.0 * std);
      CHECK(o.query(init->point) == 1);
    }
  }
  SUBCASE("escalation reaches distant blobs") {
    DecisionOracle o = halfspace_oracle(Eigen::Vector2d(1.0, 0.0), 5.0);
    const Eigen::Vector2d x(0.0, 0.0);
    CHECK_FALSE(init_adversarial(o, x, 0, 50, 0.1, 0.2, 1e-4, rng).has_value());
    const auto init = init_adversarial(o, x, 0, 50, 0.1, 10.0, 1e-4, rng);
    REQUIRE(init.has_value());
    CHECK((init->point - x).norm() >= 5.0);
  }
  DecisionOracle flat = constant_oracle(2, 0);
  CHECK_THROWS_AS(init_adversarial(flat, Eigen::Vector2d::Zero(), 0, 0, 1.0, 1.0, 1e-3, rng),
                  std::invalid_argument);
}

TEST_CASE("normal estimation") {
  Rng rng(2);
  const Eigen::Vector2d normal = Eigen::Vector2d(1.0, 2.0).normalized();
  DecisionOracle o = halfspace_oracle(normal, 0.0);
  int good = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const NormalEstimate e = estimate_normal(o, Eigen::Vector2d::Zero(), 0, 1000, 0.1, rng);
    CHECK(e.ok);
    CHECK(e.direction.norm() == doctest::Approx(1.0));
    good += e.direction.dot(normal) >= 0.9;
  }
  CHECK(good == 20);

  const NormalEstimate one = estimate_normal(o, Eigen::Vector2d::Zero(), 0, 1, 0.1, rng);
  CHECK(one.direction.norm() == doctest::Approx(1.0));

  // Far from the boundary every probe is one-sided; the radius is halved.
  const NormalEstimate far = estimate_normal(o, Eigen::Vector2d(-10.0, 0.0), 0, 50, 1.0, rng, 4);
  CHECK_FALSE(far.ok);
  CHECK(far.radius == doctest::Approx(1.0 / 16.0));

  // Error of the direction shrinks with the probe radius on a curved boundary.
  DecisionOracle circle(
      [](const Eigen::MatrixXd& xs) {
        std::vector<int> out;
        for (Index j = 0; j < xs.cols(); ++j) out.push_back(xs.col(j).norm() > 1.0 ? 1 : 0);
        return out;
      },
      2);
  auto spread = [&](double radius) {
    double err = 0.0;
    for (int t = 0; t < 200; ++t) {
      const NormalEstimate e = estimate_normal(circle, Eigen::Vector2d(1.0, 0.0), 0, 30, radius, rng);
      err += 1.0 - e.direction[0];
    }
    return err / 200.0;
  };
  CHECK(spread(0.05) < spread(0.8));
}

TEST_CASE("tangent point geometry") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.uniform_index(8));
    const Eigen::VectorXd x = gaussian_vector(rng, n, 0.0, 1.0);
    const Eigen::VectorXd xt = gaussian_vector(rng, n, 0.0, 1.0);
    const Eigen::VectorXd normal = random_unit_vector(rng, n);
    const double d = (x - xt).norm();
    const double r = d * rng.uniform() * 0.99;
    if (!(r > 0.0)) continue;
    const TangentPoint tp = tangent_point(x, xt, normal, r, &rng);
    CHECK((tp.k - xt).norm() == doctest::Approx(r).epsilon(1e-12));
    CHECK(std::abs((tp.k - xt).dot(tp.k - x)) <= 1e-9);
    CHECK_FALSE(tp.degenerate);
    if (normal.dot(x - xt) >= 0.0) CHECK(tp.on_hemisphere);
  }
  const Eigen::Vector2d x(0.0, 0.0), xt(1.0, 0.0);
  CHECK((tangent_point(x, xt, Eigen::Vector2d(0.0, 1.0), 1e-9).k - xt).norm() < 1e-8);
  const TangentPoint shrunk = tangent_point(x, xt, Eigen::Vector2d(0.0, 1.0), 3.0);
  CHECK(shrunk.radius == 0.5);
  const TangentPoint degen = tangent_point(x, xt, Eigen::Vector2d(1.0, 0.0), 0.3, &rng);
  CHECK(degen.degenerate);
  CHECK((degen.k - xt).norm() == doctest::Approx(0.3));
}

TEST_CASE("tangent attack on linear oracles") {
  Rng rng(4);
  for (Index n : {2, 10}) {
    int within = 0;
    for (int trial = 0; trial < 25; ++trial) {
      const Eigen::VectorXd normal = random_unit_vector(rng, n);
      const double offset = 0.5 * rng.uniform() + 0.1;
      DecisionOracle o = halfspace_oracle(normal, offset);
      const Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
      AttackConfig cfg;
      const AttackResult r = tangent_attack(o, x, 0, cfg, rng);
      REQUIRE(r.success);
      CHECK(o.query(r.x_adv) == 1);
      CHECK(r.adv_label == 1);
      CHECK(r.trace.size() == static_cast<size_t>(cfg.iterations + 1));
      for (size_t t = 1; t < r.trace.size(); ++t) CHECK(r.trace[t] <= r.trace[t - 1]);
      CHECK(r.delta >= margin(normal, offset, x) * (1.0 - 1e-9));
      within += std::abs(r.delta - offset) <= 0.05 * offset;
    }
    CHECK(within >= 24);
  }
}

TEST_CASE("attack failure and precondition") {
  Rng rng(5);
  DecisionOracle flat = constant_oracle(3, 2);
  const AttackResult r = tangent_attack(flat, Eigen::Vector3d::Zero(), 2, AttackConfig{}, rng);
  CHECK_FALSE(r.success);
  CHECK_FALSE(r.failure.empty());
  CHECK(std::isinf(r.delta));
  CHECK_THROWS_AS(tangent_attack(flat, Eigen::Vector3d::Zero(), 1, AttackConfig{}, rng),
                  std::invalid_argument);
  AttackConfig bad;
  bad.iterations = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("brute force oracle") {
  SUBCASE("linear in the plane") {
    const Eigen::Vector2d normal = Eigen::Vector2d(0.3, -0.7).normalized();
    DecisionOracle o = halfspace_oracle(normal, 0.37);
    const double d = brute_force_distance(o, Eigen::Vector2d::Zero(), 0, 720, 1e-9, 2.0);
    CHECK(std::abs(d - 0.37) <= 1e-3 * 0.37);
  }
  SUBCASE("axis directions on an axis-aligned boundary") {
    DecisionOracle o = halfspace_oracle(Eigen::Vector2d(0.0, 1.0), 0.25);
    CHECK(brute_force_distance(o, Eigen::Vector2d::Zero(), 0, 4, 1e-12, 1.0) ==
          doctest::Approx(0.25).epsilon(1e-10));
  }
  SUBCASE("more directions never increase the distance") {
    Rng rng(6);
    for (Index n : {2, 3}) {
      for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd normal = random_unit_vector(rng, n);
        DecisionOracle o = halfspace_oracle(normal, 0.5);
        double prev = std::numeric_limits<double>::infinity();
        for (int dirs : {8, 16, 32, 64, 128}) {
          const double d = brute_force_distance(o, Eigen::VectorXd::Zero(n), 0, dirs, 1e-10, 3.0);
          CHECK(d <= prev);
          CHECK(d >= 0.5 - 1e-9);
          prev = d;
        }
      }
    }
  }
  SUBCASE("nothing within range") {
    DecisionOracle flat = constant_oracle(2, 0);
    CHECK(std::isinf(brute_force_distance(flat, Eigen::Vector2d::Zero(), 0, 16, 1e-6, 1.0)));
    CHECK_THROWS_AS(brute_force_distance(flat, Eigen::VectorXd::Zero(4), 0, 16, 1e-6, 1.0),
                    std::invalid_argument);
  }
}

TEST_CASE("robustness statistics") {
  const RobustnessStats ones = robustness_report({1.0, 1.0, 1.0}, {0.5, 1.0, 2.0});
  CHECK(ones.proportion == std::vector<double>{1.0, 1.0, 0.0});
  CHECK(ones.stddev == 0.0);

  Rng rng(7);
  std::vector<double> d;
  for (int i = 0; i < 301; ++i) d.push_back(i % 3 == 0 ? rng.uniform() : 2.0 + rng.uniform());
  const std::vector<double> taus{0.0, 0.5, 1.5, 2.5, 10.0};
  const RobustnessStats st = robustness_report(d, taus);
  for (size_t t = 0; t < taus.size(); ++t) {
    double count = 0;
    for (double v : d) count += v >= taus[t];
    CHECK(st.proportion[t] == count / static_cast<double>(d.size()));
  }
  std::vector<double> s = d;
  std::sort(s.begin(), s.end());
  CHECK(st.median == s[150]);
  CHECK(st.q1 == s[75]);
  CHECK(st.q3 == s[225]);
  CHECK(st.min == s.front());
  CHECK(st.max == s.back());
  CHECK_THROWS_AS(robustness_report({}, {1.0}), std::invalid_argument);
}

TEST_CASE("attack csv") {
  std::ostringstream out;
  write_attack_csv(out, {{3, 1, 0, 0.1, 1234}});
  CHECK(out.str() == "sample,true_label,adv_label,delta,queries\n3,1,0,0.10000000000000001,1234\n");
}

}  // TEST_SUITE
