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
#include <functional>
#include <vector>

#include "w2snn/locality.hpp"
#include "w2snn/snn.hpp"
#include "w2snn/trainer.hpp"

namespace w2snn::experiments {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Sin-of-linear random field (synthetic data set).
// y_j = sin((z_j^1 + sum_k z_j^{k+1} eps_k) / 16), z linear in the 2-D input,
// eps a d0-dimensional Gaussian noise vector shared across components.
// ---------------------------------------------------------------------------

enum class NoiseSpec { kConstant, kExponential, kScaled };

struct Example1Config {
  int d = 10;              // output dimension
  int d0 = 3;              // noise dimension
  NoiseSpec noise = NoiseSpec::kConstant;
  double s = 0.1;          // base noise scale
  int n_train = 4000;
  int n_test = 100;
  int k_test = 20;         // truth draws per test point
  std::uint64_t coeff_seed = 7;

  void validate() const;
  // Per-noise-dimension scales sigma_1..sigma_{d0}.
  std::vector<double> sigmas() const;
};

struct Example1Data {
  locality::Dataset train;
  Mat coeff1;  // d x (d0+1), weight of x_1 in each z_j^k
  Mat coeff2;  // d x (d0+1), weight of x_2
  Mat test_inputs;              // n_test x 2
  std::vector<Mat> test_truth;  // per test point, k_test x d
};

Example1Data gen_example1(const Example1Config& config, std::uint64_t seed);

// One output vector at x given the noise vector eps (size d0).
Vec example1_response(const Example1Config& config, const Mat& coeff1, const Mat& coeff2,
                      const Eigen::Vector2d& x, const Vec& eps);

// Average relative errors in ensemble mean and standard deviation over test
// points and components; near-zero denominators are excluded and tallied.
struct RelativeErrors {
  double mean_err = 0.0;
  double sd_err = 0.0;
  int excluded_mean = 0;
  int excluded_sd = 0;
  std::vector<double> per_component_mean;  // averaged over test points
  std::vector<double> per_component_sd;
};

RelativeErrors relative_errors(const std::vector<Mat>& truth_ensembles,
                               const std::vector<Mat>& pred_ensembles);

// ---------------------------------------------------------------------------
// Damped linear oscillator chain (48 positions + 48 velocities).
// ---------------------------------------------------------------------------

constexpr int kOscillators = 48;
constexpr int kStateDim = 2 * kOscillators;

struct ODEConfig {
  int d = 5;             // number of independent damping parameters
  double sigma = 1.0;    // damping log-noise scale
  double sigma0 = 0.01;  // initial-condition noise
  double dt = 0.1;
  int n_slices = 30;     // N_T
  int n_traj = 300;
  int substeps = 5;      // RK4 substeps per slice

  void validate() const;
};

// dx_j/dt = v_j; dv_j/dt = (x_{j-1} - 2 x_j + x_{j+1})/50 - c_j v_j with zero
// Dirichlet phantom neighbors.
Vec oscillator_rhs(const Vec& state, const Vec& damping);

// c_j = exp(xi_j/4 - 1.6) with d independent xi draws; entries j >= d share
// the d-th draw.
Vec sample_damping(int d, double sigma, RngStream& rng);

// Classical RK4 with step dt/substeps; records the state at t_i = i*dt,
// i = 1..n_slices. Aborts with the slice index on non-finite states.
std::vector<Vec> integrate_rk4(const std::function<Vec(const Vec&)>& rhs, const Vec& y0,
                               double dt, int n_slices, int substeps);

struct TrajectoryEnsemble {
  Mat initial;              // n_traj x dim
  std::vector<Mat> states;  // n_slices entries, each n_traj x dim
  Vec times;                // t_i = i*dt
  std::vector<Vec> damping;                          // truth ensembles
  std::vector<snn::WeightRealization> realizations;  // surrogate ensembles
};

TrajectoryEnsemble gen_truth_ensemble(const ODEConfig& config, std::uint64_t seed);

// Frozen-mode surrogate rollout from the given initial states; one stored
// realization per trajectory (drawn from per-trajectory substreams).
TrajectoryEnsemble rollout_surrogate(const snn::SNNParams& params, const Mat& initial,
                                     const ODEConfig& config, std::uint64_t seed);
// Re-rolls with already-stored realizations (bitwise reproducible).
TrajectoryEnsemble rollout_surrogate_with(const snn::SNNParams& params, const Mat& initial,
                                          const ODEConfig& config,
                                          const std::vector<snn::WeightRealization>& reals);

struct OdeTrainResult {
  snn::SNNParams params;
  train::TrainHistory history;
  TrajectoryEnsemble pred;  // final frozen-mode rollout
};

// Trains the surrogate dynamics against the time-decoupled loss,
// backpropagating through every RK4 stage of the rollout.
OdeTrainResult train_ode_recon(const ODEConfig& ode, const train::TrainConfig& config,
                               const TrajectoryEnsemble& truth);

struct OdeErrors {
  std::vector<double> err_y_per_slice;
  double err_y = 0.0;
  double err_f = 0.0;
  int excluded = 0;
};

// err_y: per-slice squared W2 between state clouds over the truth mean
// squared norm. err_f: squared W2 between ground-truth and surrogate RHS
// ensembles at states sampled from the truth trajectories.
OdeErrors ode_errors(const TrajectoryEnsemble& truth, const TrajectoryEnsemble& pred,
                     const ODEConfig& config, const snn::SNNParams& surrogate, int k_f,
                     int states_per_slice, std::uint64_t seed);

}  // namespace w2snn::experiments
