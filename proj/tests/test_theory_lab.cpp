// Copyright 2026 The w2snn Authors
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "testutil.hpp"
#include "w2snn/errors.hpp"
#include "w2snn/theory_lab.hpp"

using namespace w2snn;
using lab::BoundInputs;

TEST_CASE("fit_loglog recovers an exact power law") {
  std::vector<double> x, y;
  for (int i = 1; i <= 8; ++i) {
    x.push_back(std::pow(2.0, i));
    y.push_back(3.5 * std::pow(x.back(), -0.75));
  }
  const lab::SlopeFit fit = lab::fit_loglog(x, y);
  CHECK(fit.slope == doctest::Approx(-0.75).epsilon(1e-12));
  CHECK(std::exp(fit.intercept) == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(fit.residual_rms <= 1e-12);
  CHECK_THROWS_AS(lab::fit_loglog({1.0, 2.0}, {1.0, 2.0}), ConfigError);
}

TEST_CASE("h_bound: closed-form spot values") {
  BoundInputs in;
  in.d = 2;
  in.n = 1;
  CHECK(lab::h_bound(in) == doctest::Approx(2.0 * std::sqrt(std::log(2.0))).epsilon(1e-14));

  BoundInputs in8;
  in8.d = 8;
  in8.n = 256;
  in8.ratios.assign(8, 1.0);
  CHECK(lab::h_bound(in8) == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("h_bound: monotone decreasing on N >= 8 grids") {
  for (int d : {2, 8}) {
    BoundInputs in;
    in.d = d;
    in.ratios.assign(static_cast<std::size_t>(d), 1.0);
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 50; ++i) {
      in.n = 8.0 * std::pow(1.35, i);
      const double h = lab::h_bound(in);
      CHECK(h < prev);
      prev = h;
    }
  }
}

TEST_CASE("h_bound: validation") {
  BoundInputs in;
  in.d = 8;
  in.n = 100;
  in.ratios.assign(8, 1.0);
  in.ratios[3] = 0.0;
  CHECK_THROWS_AS(lab::h_bound(in), ConfigError);
  in.ratios[3] = 1.5;
  CHECK_THROWS_AS(lab::h_bound(in), ConfigError);
  in.ratios.assign(3, 1.0);
  CHECK_THROWS_AS(lab::h_bound(in), ConfigError);
  BoundInputs low;
  low.d = 2;
  low.n = 0.5;
  CHECK_THROWS_AS(lab::h_bound(low), ConfigError);
}

TEST_CASE("full_bound needs all optional constants") {
  BoundInputs in;
  in.d = 2;
  in.n = 100;
  CHECK_THROWS_AS(lab::full_bound(in), ConfigError);
  in.m0 = 2.0;
  in.lipschitz = 1.5;
  in.delta = 0.1;
  in.c = 3.0;
  const double h = lab::h_bound(in);
  const double expect = 4.0 * 2.0 / 10.0 + 8.0 * 3.0 * 2.0 * h + 8.0 * std::sqrt(2.0) * 1.5 * 0.1;
  CHECK(lab::full_bound(in) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("d>4 branch: dominance of the second term matches the crossover") {
  // Homogeneous ratios: terms are equal exactly at N = 1 and the second term
  // dominates beyond it.
  std::vector<double> ones(8, 1.0);
  CHECK(lab::h_crossover_n(8, ones) == doctest::Approx(1.0));

  std::vector<double> het(8);
  for (int i = 0; i < 8; ++i) het[static_cast<std::size_t>(i)] = std::exp(-0.5 * i);
  const double cross = lab::h_crossover_n(8, het);
  CHECK(cross <= 1.0);

  auto term1 = [](double n) { return std::pow(n, -0.25); };
  auto term2 = [&](const std::vector<double>& ratios, double n) {
    double prod = 1.0;
    for (double r : ratios) prod *= r;
    return std::pow(prod * n, -1.0 / 8.0);
  };
  for (double n : {1.0, 2.0, 16.0, 1024.0, 1e6}) {
    CHECK((term2(ones, n) >= term1(n)) == (n >= lab::h_crossover_n(8, ones) - 1e-12));
    CHECK(term2(het, n) >= term1(n));  // crossover below 1: dominates everywhere
  }
  CHECK_THROWS_AS(lab::h_crossover_n(3, ones), ConfigError);
}

TEST_CASE("rate study: point mass gives all-zero costs") {
  lab::RateStudyConfig cfg;
  cfg.d = 2;
  cfg.scale = 0.0;
  cfg.n_grid = {4, 8, 16};
  cfg.replicates = 5;
  const lab::RateStudyResult r = lab::two_sample_w2_rate(cfg);
  for (double m : r.mean_cost) CHECK(m == 0.0);
  CHECK(r.fit.log_x.empty());  // no fit on degenerate data
}

TEST_CASE("rate study: c0 = 0 heterogeneous spec equals homogeneous bitwise") {
  const std::vector<int> grid = {8, 16, 32};
  const auto [hom, het] = lab::heterogeneity_comparison(8, 0.0, grid, 6, 99);
  REQUIRE(hom.mean_cost.size() == het.mean_cost.size());
  for (std::size_t i = 0; i < hom.mean_cost.size(); ++i) {
    CHECK(hom.mean_cost[i] == het.mean_cost[i]);
  }
  CHECK(hom.fit.slope == het.fit.slope);
}

TEST_CASE("rate study: 1-D Gaussian slope lands in the parametric band") {
  lab::RateStudyConfig cfg;
  cfg.d = 1;
  cfg.n_grid = {32, 64, 128, 256};
  cfg.replicates = 10;
  cfg.seed = 5;
  const lab::RateStudyResult r = lab::two_sample_w2_rate(cfg);
  CHECK(r.fit.slope >= -1.2);
  CHECK(r.fit.slope <= -0.8);
  // Sixth-moment constant of a standard Gaussian: 15^{1/6}.
  CHECK(r.moment_m == doctest::Approx(std::pow(15.0, 1.0 / 6.0)).epsilon(1e-12));
}

TEST_CASE("rate study: seed reproducibility is bitwise") {
  lab::RateStudyConfig cfg;
  cfg.d = 3;
  cfg.n_grid = {8, 16, 32};
  cfg.replicates = 5;
  cfg.seed = 7;
  const auto a = lab::two_sample_w2_rate(cfg);
  const auto b = lab::two_sample_w2_rate(cfg);
  CHECK(a.fit.slope == b.fit.slope);
  CHECK(a.fit.intercept == b.fit.intercept);
  for (std::size_t i = 0; i < a.mean_cost.size(); ++i) CHECK(a.mean_cost[i] == b.mean_cost[i]);
}

TEST_CASE("rate study: validation") {
  lab::RateStudyConfig cfg;
  cfg.n_grid = {32, 16};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.n_grid = {16, 2048};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.n_grid = {16, 32};
  cfg.replicates = 3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

namespace {

snn::SNNParams relu_base(std::uint64_t seed) {
  snn::SNNConfig cfg;
  cfg.input_dim = 2;
  cfg.output_dim = 3;
  cfg.hidden = {16, 16};
  cfg.activation = ad::Activation::kRelu;
  cfg.mode = snn::ForwardMode::kNormal;
  cfg.init_scale = 0.25;
  cfg.sigma_init = 0.005;
  RngStream rng(derive_seed(seed, kTagInit));
  return snn::init(cfg, rng);
}

}  // namespace

TEST_CASE("robustness: pure output-bias perturbation has slope exactly 2") {
  const snn::SNNParams base = relu_base(3);
  const Eigen::Vector2d x(1.0, 1.0);
  const lab::RobustnessResult r =
      lab::robustness_slope(base, x, {0.05, 0.1, 0.2, 0.4}, 256, 4, 3, true, 11);
  REQUIRE(r.conclusive);
  CHECK(r.fit.slope == doctest::Approx(2.0).epsilon(1e-9));
  // Translation identity: each mean equals eps^2 exactly.
  for (std::size_t i = 0; i < r.eps_grid.size(); ++i) {
    if (r.cleared[i]) {
      CHECK(r.mean_w2[i] == doctest::Approx(r.eps_grid[i] * r.eps_grid[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("robustness: generic direction is near-quadratic and satisfies the envelope") {
  const snn::SNNParams base = relu_base(5);
  const Eigen::Vector2d x(1.0, 1.0);
  const lab::RobustnessResult r =
      lab::robustness_slope(base, x, {0.05, 0.1, 0.2, 0.4}, 512, 4, 3, false, 13);
  REQUIRE(r.conclusive);
  CHECK(r.fit.slope >= 1.5);
  CHECK(r.fit.slope <= 2.5);
  const double c_fit = std::exp(r.fit.intercept);
  for (std::size_t i = 0; i < r.eps_grid.size(); ++i) {
    if (r.cleared[i]) {
      CHECK(r.mean_w2[i] <= 2.0 * c_fit * r.eps_grid[i] * r.eps_grid[i]);
    }
  }
}

TEST_CASE("robustness: inconclusive when the grid sits below the floor") {
  const snn::SNNParams base = relu_base(7);
  const Eigen::Vector2d x(1.0, 1.0);
  const lab::RobustnessResult r =
      lab::robustness_slope(base, x, {1e-9, 2e-9, 4e-9}, 64, 3, 3, false, 17);
  CHECK_FALSE(r.conclusive);
  CHECK(r.advice.find("raise K") != std::string::npos);
}

TEST_CASE("robustness: requires a ReLU base network") {
  snn::SNNParams base = relu_base(9);
  base.config.activation = ad::Activation::kElu;
  const Eigen::Vector2d x(1.0, 1.0);
  CHECK_THROWS_AS(lab::robustness_slope(base, x, {0.1, 0.2, 0.4}, 32, 2, 2, false, 19),
                  ConfigError);
}

TEST_CASE("robustness: identical configs give bitwise-identical fits") {
  const snn::SNNParams base = relu_base(11);
  const Eigen::Vector2d x(0.5, -0.5);
  const auto a = lab::robustness_slope(base, x, {0.1, 0.2, 0.4}, 128, 3, 3, false, 23);
  const auto b = lab::robustness_slope(base, x, {0.1, 0.2, 0.4}, 128, 3, 3, false, 23);
  REQUIRE(a.conclusive == b.conclusive);
  CHECK(a.fit.slope == b.fit.slope);
  CHECK(a.floor == b.floor);
  for (std::size_t i = 0; i < a.mean_w2.size(); ++i) CHECK(a.mean_w2[i] == b.mean_w2[i]);
}
