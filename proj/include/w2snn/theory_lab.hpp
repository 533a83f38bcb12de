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

#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "w2snn/snn.hpp"

namespace w2snn::lab {

// Least-squares fit of log(y) against log(x).
struct SlopeFit {
  std::vector<double> log_x;
  std::vector<double> log_y;
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  double slope_stderr = 0.0;
};

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Generalization-bound rate function.
// h(N, d) = 2 N^{-1/4} log(1+N)^{1/2}                      for d <= 4
//         = 2 (N^{-1/4} + (prod_i(sigma_i/sigma_1) N)^{-1/d}) for d > 4
// ---------------------------------------------------------------------------

struct BoundInputs {
  double n = 1.0;
  int d = 1;
  std::vector<double> ratios;  // sigma_i / sigma_1, first entry 1
  std::optional<double> m0;
  std::optional<double> lipschitz;
  std::optional<double> delta;
  std::optional<double> c;
};

double h_bound(const BoundInputs& in);

// Full right-hand side 4 M0 / sqrt(N) + 8 C M0 h + 8 sqrt(M0) L delta; all
// optional constants must be present.
double full_bound(const BoundInputs& in);

// N where the two d > 4 branch terms cross (closed form); the second term
// dominates for N above this value. With admissible ratios the crossover
// never exceeds 1.
double h_crossover_n(int d, const std::vector<double>& ratios);

// ---------------------------------------------------------------------------
// Monte Carlo convergence-rate studies (two-sample squared W2).
// ---------------------------------------------------------------------------

struct RateStudyConfig {
  int d = 8;
  bool heterogeneous = false;  // sigma_i = exp(-c0 * i) instead of 1
  double c0 = 1.0;
  double scale = 1.0;          // overall scale; 0 gives a point mass
  std::vector<int> n_grid = {32, 64, 128, 256, 512, 1024};
  int replicates = 20;
  std::uint64_t seed = 1;

  void validate() const;
  std::vector<double> sigmas() const;
};

struct RateStudyResult {
  std::vector<int> n_grid;
  std::vector<double> mean_cost;
  std::vector<double> std_error;
  SlopeFit fit;
  double moment_m = 0.0;  // sixth-moment constant of the sampled Gaussian
};

// For each N: mean over replicate pairs of squared_w2 between two fresh
// N-sample draws; slope fitted on log N vs log mean cost.
RateStudyResult two_sample_w2_rate(const RateStudyConfig& config);

// Same seeds for the homogeneous and heterogeneous runs, paired per
// replicate. Returns (homogeneous, heterogeneous).
std::pair<RateStudyResult, RateStudyResult> heterogeneity_comparison(
    int d, double c0, const std::vector<int>& n_grid, int replicates, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Perturbation slope study.
// ---------------------------------------------------------------------------

struct RobustnessResult {
  double floor = 0.0;                // two-sample bias at identical params
  std::vector<double> eps_grid;
  std::vector<double> mean_w2;       // paired base-vs-perturbed squared W2
  std::vector<bool> cleared;         // mean_w2 >= 3 * floor
  SlopeFit fit;                      // over cleared points (when conclusive)
  Eigen::VectorXd direction;
  bool conclusive = false;
  std::string advice;                // set when inconclusive
};

// Perturbs along one fixed random unit direction in the flattened (a, sigma,
// b) space. Base and perturbed ensembles share their noise draws per repeat
// (the Gaussian coupling); the floor uses independent draws. The fit covers
// the eps values whose signal clears 3x the floor; with fewer than 3 such
// points the result is inconclusive (no fit) and carries advice.
RobustnessResult robustness_slope(const snn::SNNParams& base, const Eigen::VectorXd& x,
                                  const std::vector<double>& eps_grid, int k, int repeats,
                                  int floor_repeats, bool bias_only, std::uint64_t seed);

// Unit direction used by the study (bias_only restricts the support to the
// output-layer biases).
Eigen::VectorXd perturbation_direction(const snn::SNNParams& base, bool bias_only,
                                       std::uint64_t seed);

}  // namespace w2snn::lab
