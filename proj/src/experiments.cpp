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

#include "w2snn/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "w2snn/errors.hpp"
#include "w2snn/ot.hpp"
#include "w2snn/parallel.hpp"

namespace w2snn::experiments {

void Example1Config::validate() const {
  if (d < 1 || d0 < 1) throw ConfigError("example1: d and d0 must be >= 1");
  if (s <= 0.0) throw ConfigError("example1: noise scale must be > 0");
  if (n_train < 1 || n_test < 1 || k_test < 1) {
    throw ConfigError("example1: sample counts must be >= 1");
  }
  if (noise == NoiseSpec::kConstant && d0 > d) {
    throw ConfigError("example1: constant-noise configs require d0 <= d (noise dimensions embed "
                      "in the output)");
  }
}

std::vector<double> Example1Config::sigmas() const {
  std::vector<double> out(static_cast<std::size_t>(d0));
  for (int k = 1; k <= d0; ++k) {
    double v = s;
    if (noise == NoiseSpec::kExponential) v = s * std::exp(-k);
    if (noise == NoiseSpec::kScaled) v = s * std::sqrt(3.0 / static_cast<double>(d0));
    out[static_cast<std::size_t>(k - 1)] = v;
  }
  return out;
}

Vec example1_response(const Example1Config& config, const Mat& coeff1, const Mat& coeff2,
                      const Eigen::Vector2d& x, const Vec& eps) {
  Vec y(config.d);
  for (int j = 0; j < config.d; ++j) {
    double arg = coeff1(j, 0) * x(0) + coeff2(j, 0) * x(1);  // z_j^1
    for (int k = 1; k <= config.d0; ++k) {
      const double z = coeff1(j, k) * x(0) + coeff2(j, k) * x(1);
      arg += z * eps(k - 1);
    }
    y(j) = std::sin(arg / 16.0);
  }
  return y;
}

Example1Data gen_example1(const Example1Config& config, std::uint64_t seed) {
  config.validate();
  Example1Data data;

  RngStream coeff_rng(derive_seed(config.coeff_seed, kTagData, 0));
  data.coeff1.resize(config.d, config.d0 + 1);
  data.coeff2.resize(config.d, config.d0 + 1);
  for (int j = 0; j < config.d; ++j) {
    for (int k = 0; k <= config.d0; ++k) {
      data.coeff1(j, k) = coeff_rng.normal();
      data.coeff2(j, k) = coeff_rng.normal();
    }
  }

  const std::vector<double> sig = config.sigmas();
  auto draw_eps = [&](RngStream& rng) {
    Vec eps(config.d0);
    for (int k = 0; k < config.d0; ++k) eps(k) = rng.normal(0.0, sig[static_cast<std::size_t>(k)]);
    return eps;
  };

  RngStream train_rng(derive_seed(seed, kTagData, 1));
  data.train.xs.resize(config.n_train, 2);
  data.train.ys.resize(config.n_train, config.d);
  for (int i = 0; i < config.n_train; ++i) {
    const Eigen::Vector2d x(train_rng.normal(), train_rng.normal());
    data.train.xs.row(i) = x.transpose();
    const Vec eps = draw_eps(train_rng);
    data.train.ys.row(i) = example1_response(config, data.coeff1, data.coeff2, x, eps).transpose();
  }

  RngStream test_rng(derive_seed(seed, kTagData, 2));
  data.test_inputs.resize(config.n_test, 2);
  data.test_truth.reserve(static_cast<std::size_t>(config.n_test));
  for (int i = 0; i < config.n_test; ++i) {
    const Eigen::Vector2d x(test_rng.uniform(-0.25, 0.25), test_rng.uniform(-0.25, 0.25));
    data.test_inputs.row(i) = x.transpose();
    Mat ens(config.k_test, config.d);
    for (int r = 0; r < config.k_test; ++r) {
      const Vec eps = draw_eps(test_rng);
      ens.row(r) = example1_response(config, data.coeff1, data.coeff2, x, eps).transpose();
    }
    data.test_truth.push_back(std::move(ens));
  }
  return data;
}

RelativeErrors relative_errors(const std::vector<Mat>& truth_ensembles,
                               const std::vector<Mat>& pred_ensembles) {
  if (truth_ensembles.size() != pred_ensembles.size() || truth_ensembles.empty()) {
    throw DimensionError("relative_errors: test grids must match");
  }
  const Eigen::Index d = truth_ensembles[0].cols();
  if (pred_ensembles[0].cols() != d) {
    throw DimensionError("relative_errors: component counts must match (" + std::to_string(d) +
                         " vs " + std::to_string(pred_ensembles[0].cols()) + ")");
  }
  constexpr double kGuard = 1e-12;

  RelativeErrors out;
  out.per_component_mean.assign(static_cast<std::size_t>(d), 0.0);
  out.per_component_sd.assign(static_cast<std::size_t>(d), 0.0);
  std::vector<int> used_mean(static_cast<std::size_t>(d), 0);
  std::vector<int> used_sd(static_cast<std::size_t>(d), 0);

  auto sample_sd = [](const Eigen::VectorXd& col) {
    const double mean = col.mean();
    if (col.size() < 2) return 0.0;
    return std::sqrt((col.array() - mean).square().sum() / static_cast<double>(col.size() - 1));
  };

  for (std::size_t t = 0; t < truth_ensembles.size(); ++t) {
    const Mat& truth = truth_ensembles[t];
    const Mat& pred = pred_ensembles[t];
    for (Eigen::Index j = 0; j < d; ++j) {
      const double tm = truth.col(j).mean();
      const double pm = pred.col(j).mean();
      if (std::abs(tm) < kGuard) {
        ++out.excluded_mean;
      } else {
        out.per_component_mean[static_cast<std::size_t>(j)] += std::abs(pm - tm) / std::abs(tm);
        ++used_mean[static_cast<std::size_t>(j)];
      }
      const double ts = sample_sd(truth.col(j));
      const double ps = sample_sd(pred.col(j));
      if (ts < kGuard) {
        ++out.excluded_sd;
      } else {
        out.per_component_sd[static_cast<std::size_t>(j)] += std::abs(ps - ts) / ts;
        ++used_sd[static_cast<std::size_t>(j)];
      }
    }
  }

  double mean_sum = 0.0, sd_sum = 0.0;
  int mean_n = 0, sd_n = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    const std::size_t js = static_cast<std::size_t>(j);
    mean_sum += out.per_component_mean[js];
    sd_sum += out.per_component_sd[js];
    mean_n += used_mean[js];
    sd_n += used_sd[js];
    if (used_mean[js] > 0) out.per_component_mean[js] /= used_mean[js];
    if (used_sd[js] > 0) out.per_component_sd[js] /= used_sd[js];
  }
  out.mean_err = mean_n > 0 ? mean_sum / mean_n : 0.0;
  out.sd_err = sd_n > 0 ? sd_sum / sd_n : 0.0;
  return out;
}

// ---------------------------------------------------------------------------

void ODEConfig::validate() const {
  if (d < 1 || d > kOscillators) {
    throw ConfigError("ode: d must be in [1, " + std::to_string(kOscillators) + "]");
  }
  if (sigma < 0.0 || sigma0 < 0.0) throw ConfigError("ode: noise scales must be >= 0");
  if (dt <= 0.0) throw ConfigError("ode: dt must be > 0");
  if (n_slices < 1) throw ConfigError("ode: n_slices must be >= 1");
  if (n_traj < 2) throw ConfigError("ode: n_traj must be >= 2");
  if (substeps < 1) throw ConfigError("ode: substeps must be >= 1");
}

Vec oscillator_rhs(const Vec& state, const Vec& damping) {
  Vec dydt(kStateDim);
  const auto x = state.head(kOscillators);
  const auto v = state.tail(kOscillators);
  for (int j = 0; j < kOscillators; ++j) {
    const double left = j > 0 ? x(j - 1) : 0.0;
    const double right = j + 1 < kOscillators ? x(j + 1) : 0.0;
    dydt(j) = v(j);
    dydt(kOscillators + j) =
        (left - x(j)) / 50.0 + (right - x(j)) / 50.0 - damping(j) * v(j);
  }
  return dydt;
}

Vec sample_damping(int d, double sigma, RngStream& rng) {
  if (d < 1 || d > kOscillators) {
    throw ConfigError("sample_damping: d must be in [1, " + std::to_string(kOscillators) + "]");
  }
  Vec xi(d);
  for (int j = 0; j < d; ++j) xi(j) = rng.normal(0.0, sigma);
  Vec c(kOscillators);
  for (int j = 0; j < kOscillators; ++j) {
    const double x = j < d - 1 ? xi(j) : xi(d - 1);
    c(j) = std::exp(x / 4.0 - 1.6);
  }
  return c;
}

std::vector<Vec> integrate_rk4(const std::function<Vec(const Vec&)>& rhs, const Vec& y0,
                               double dt, int n_slices, int substeps) {
  if (substeps < 1) throw ConfigError("integrate_rk4: substeps must be >= 1");
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(n_slices));
  const double h = dt / substeps;
  Vec y = y0;
  for (int i = 0; i < n_slices; ++i) {
    for (int s = 0; s < substeps; ++s) {
      const Vec k1 = rhs(y);
      const Vec k2 = rhs(y + 0.5 * h * k1);
      const Vec k3 = rhs(y + 0.5 * h * k2);
      const Vec k4 = rhs(y + h * k3);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!y.allFinite()) {
      throw NumericError("integrate_rk4: non-finite state at slice " + std::to_string(i + 1));
    }
    out.push_back(y);
  }
  return out;
}

TrajectoryEnsemble gen_truth_ensemble(const ODEConfig& config, std::uint64_t seed) {
  config.validate();
  TrajectoryEnsemble ens;
  ens.initial.resize(config.n_traj, kStateDim);
  ens.states.assign(static_cast<std::size_t>(config.n_slices),
                    Mat(config.n_traj, kStateDim));
  ens.times.resize(config.n_slices);
  for (int i = 0; i < config.n_slices; ++i) ens.times(i) = (i + 1) * config.dt;
  ens.damping.resize(static_cast<std::size_t>(config.n_traj));

  parallel_chunks(static_cast<std::size_t>(config.n_traj), 8,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t r = begin; r < end; ++r) {
                      RngStream rng(derive_seed(seed, kTagTruth, r));
                      Vec y0(kStateDim);
                      for (int k = 0; k < kStateDim; ++k) y0(k) = rng.normal(1.0, config.sigma0);
                      const Vec c = sample_damping(config.d, config.sigma, rng);
                      ens.initial.row(static_cast<Eigen::Index>(r)) = y0.transpose();
                      ens.damping[r] = c;
                      const auto traj = integrate_rk4(
                          [&](const Vec& y) { return oscillator_rhs(y, c); }, y0, config.dt,
                          config.n_slices, config.substeps);
                      for (int i = 0; i < config.n_slices; ++i) {
                        ens.states[static_cast<std::size_t>(i)].row(static_cast<Eigen::Index>(r)) =
                            traj[static_cast<std::size_t>(i)].transpose();
                      }
                    }
                  });
  return ens;
}

namespace {

// Plain frozen-realization rollout for one trajectory; writes each slice
// state into row `r` of the per-slice matrices.
void rollout_one(const snn::SNNParams& params, const snn::WeightRealization& real, const Vec& y0,
                 const ODEConfig& config, int r, std::vector<Mat>& slices) {
  auto rhs = [&](const Vec& y) { return snn::forward(params, real, y); };
  const auto traj = integrate_rk4(rhs, y0, config.dt, config.n_slices, config.substeps);
  for (int i = 0; i < config.n_slices; ++i) {
    slices[static_cast<std::size_t>(i)].row(r) = traj[static_cast<std::size_t>(i)].transpose();
  }
}

}  // namespace

TrajectoryEnsemble rollout_surrogate_with(const snn::SNNParams& params, const Mat& initial,
                                          const ODEConfig& config,
                                          const std::vector<snn::WeightRealization>& reals) {
  const int n_traj = static_cast<int>(initial.rows());
  const int dim = static_cast<int>(initial.cols());
  TrajectoryEnsemble ens;
  ens.initial = initial;
  ens.states.assign(static_cast<std::size_t>(config.n_slices), Mat(n_traj, dim));
  ens.times.resize(config.n_slices);
  for (int i = 0; i < config.n_slices; ++i) ens.times(i) = (i + 1) * config.dt;
  ens.realizations = reals;
  parallel_chunks(static_cast<std::size_t>(n_traj), 4,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t r = begin; r < end; ++r) {
                      rollout_one(params, ens.realizations[r],
                                  initial.row(static_cast<Eigen::Index>(r)).transpose(), config,
                                  static_cast<int>(r), ens.states);
                    }
                  });
  return ens;
}

TrajectoryEnsemble rollout_surrogate(const snn::SNNParams& params, const Mat& initial,
                                     const ODEConfig& config, std::uint64_t seed) {
  const int n_traj = static_cast<int>(initial.rows());
  std::vector<snn::WeightRealization> reals(static_cast<std::size_t>(n_traj));
  for (int r = 0; r < n_traj; ++r) {
    RngStream rng(derive_seed(seed, kTagEval, static_cast<std::uint64_t>(r)));
    reals[static_cast<std::size_t>(r)] = snn::sample_realization(params, rng);
  }
  return rollout_surrogate_with(params, initial, config, reals);
}

OdeTrainResult train_ode_recon(const ODEConfig& ode, const train::TrainConfig& config,
                               const TrajectoryEnsemble& truth) {
  ode.validate();
  config.validate();
  const int dim = static_cast<int>(truth.initial.cols());
  if (config.snn.input_dim != dim || config.snn.output_dim != dim) {
    throw ConfigError("ode surrogate network must map the state to its derivative (" +
                      std::to_string(dim) + " -> " + std::to_string(dim) + ")");
  }
  const int n_traj = static_cast<int>(truth.initial.rows());

  // Neighborhoods are built once over the trajectories' initial states.
  const locality::NeighborhoodIndex index = locality::build_index(truth.initial, config.delta);
  const std::vector<int> elig = locality::eligible(index, config.n0);
  if (elig.empty()) {
    throw ConfigError(
        "no eligible trajectories: every initial-state neighborhood has fewer than N0 samples; "
        "increase delta or decrease N0");
  }

  RngStream init_rng(derive_seed(config.seed, kTagInit));
  snn::SNNParams params = snn::init(config.snn, init_rng);
  train::AdamState adam = train::make_adam_state(params);
  train::TrainHistory history;

  locality::MinibatchSelection sel;
  int minibatch_id = -1;
  const double h = ode.dt / ode.substeps;

  for (int epoch = 0; epoch < config.epoch_max; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    if (epoch % config.epoch_update == 0) {
      ++minibatch_id;
      RngStream batch_rng(
          derive_seed(config.seed, kTagMinibatch, static_cast<std::uint64_t>(minibatch_id)));
      sel = locality::select_minibatch(elig, config.n_batch, batch_rng);
      sel.n0 = config.n0;
      sel.epoch_update = config.epoch_update;
    }

    // Pass 1: plain rollouts with this epoch's frozen realizations.
    std::vector<Mat> pred(static_cast<std::size_t>(ode.n_slices), Mat(n_traj, dim));
    std::vector<snn::WeightRealization> reals(static_cast<std::size_t>(n_traj));
    bool diverged = false;
    parallel_chunks(static_cast<std::size_t>(n_traj), 4,
                    [&](std::size_t, std::size_t begin, std::size_t end) {
                      for (std::size_t r = begin; r < end; ++r) {
                        RngStream rng(derive_seed(config.seed, kTagRealize,
                                                  static_cast<std::uint64_t>(epoch), r));
                        reals[r] = snn::sample_realization(params, rng);
                        try {
                          rollout_one(params, reals[r],
                                      truth.initial.row(static_cast<Eigen::Index>(r)).transpose(),
                                      ode, static_cast<int>(r), pred);
                        } catch (const NumericError&) {
                          diverged = true;
                          return;
                        }
                      }
                    });
    if (diverged) {
      throw NumericError("ode training: divergent rollout at epoch " + std::to_string(epoch) +
                         "; consider enabling train.grad_clip");
    }

    const locality::TimeDecoupledLoss loss =
        locality::time_decoupled_terms(truth.states, pred, sel, index);
    if (!std::isfinite(loss.loss)) {
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
    }

    // Per-slice, per-trajectory state gradients.
    std::vector<Mat> state_grads(static_cast<std::size_t>(ode.n_slices),
                                 Mat::Zero(n_traj, dim));
    const double slice_weight = 1.0 / static_cast<double>(ode.n_slices);
    for (int i = 0; i < ode.n_slices; ++i) {
      locality::add_pred_grads(truth.states[static_cast<std::size_t>(i)],
                               pred[static_cast<std::size_t>(i)],
                               loss.slices[static_cast<std::size_t>(i)], slice_weight,
                               state_grads[static_cast<std::size_t>(i)]);
    }

    // Pass 2: replay each trajectory on a tape and backpropagate through all
    // RK4 stages, seeding every recorded slice state with its gradient.
    const std::size_t chunk = 2;
    const std::size_t tasks = num_chunks(static_cast<std::size_t>(n_traj), chunk);
    std::vector<std::vector<snn::LayerTensors>> partials(tasks);
    parallel_chunks(
        static_cast<std::size_t>(n_traj), chunk,
        [&](std::size_t task, std::size_t begin, std::size_t end) {
          partials[task] = snn::zero_like(params);
          for (std::size_t r = begin; r < end; ++r) {
            ad::Graph g(static_cast<std::size_t>(ode.n_slices) * ode.substeps * 24 + 16);
            snn::TapedNet net = snn::make_taped_net(g, params, reals[r]);
            ad::Value y =
                g.leaf(Mat(truth.initial.row(static_cast<Eigen::Index>(r)).transpose()));
            std::vector<ad::Value> seeded;
            for (int i = 0; i < ode.n_slices; ++i) {
              for (int s = 0; s < ode.substeps; ++s) {
                ad::Value k1 = snn::forward_taped(g, params.config, net, y);
                ad::Value k2 = snn::forward_taped(g, params.config, net,
                                                  g.lincomb({1.0, 0.5 * h}, {y, k1}));
                ad::Value k3 = snn::forward_taped(g, params.config, net,
                                                  g.lincomb({1.0, 0.5 * h}, {y, k2}));
                ad::Value k4 =
                    snn::forward_taped(g, params.config, net, g.lincomb({1.0, h}, {y, k3}));
                y = g.lincomb({1.0, h / 6.0, h / 3.0, h / 3.0, h / 6.0}, {y, k1, k2, k3, k4});
              }
              seeded.push_back(g.sum(g.hadamard(
                  y, state_grads[static_cast<std::size_t>(i)].row(static_cast<Eigen::Index>(r))
                         .transpose())));
            }
            g.backward(g.lincomb(std::vector<double>(seeded.size(), 1.0), seeded));
            snn::add_param_grads(g, net.leaves, partials[task]);
          }
        });

    std::vector<snn::LayerTensors> grads = snn::zero_like(params);
    for (std::size_t task = 0; task < tasks; ++task) {
      for (std::size_t l = 0; l < grads.size(); ++l) {
        grads[l].a += partials[task][l].a;
        grads[l].sigma += partials[task][l].sigma;
        grads[l].b += partials[task][l].b;
        if (grads[l].skip.size() > 0) grads[l].skip += partials[task][l].skip;
      }
    }

    train::clip_global_norm(grads, config.grad_clip);
    train::adam_step(params, grads, adam, config.learning_rate, config.beta1, config.beta2,
                     config.adam_eps);

    const auto t1 = std::chrono::steady_clock::now();
    train::EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss.loss;
    rec.minibatch_id = minibatch_id;
    rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    history.epochs.push_back(rec);
  }

  OdeTrainResult result{std::move(params), std::move(history), {}};
  result.pred = rollout_surrogate(result.params, truth.initial, ode, config.seed);
  return result;
}

OdeErrors ode_errors(const TrajectoryEnsemble& truth, const TrajectoryEnsemble& pred,
                     const ODEConfig& config, const snn::SNNParams& surrogate, int k_f,
                     int states_per_slice, std::uint64_t seed) {
  if (truth.states.size() != pred.states.size() || truth.states.empty()) {
    throw DimensionError("ode_errors: ensembles must share the time grid");
  }
  if (truth.states[0].rows() != pred.states[0].rows()) {
    throw DimensionError("ode_errors: trajectory counts must match");
  }
  constexpr double kGuard = 1e-12;
  OdeErrors out;
  const std::size_t n_slices = truth.states.size();

  std::vector<double> w2(n_slices, 0.0);
  std::vector<double> norm(n_slices, 0.0);
  parallel_chunks(n_slices, 1, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      w2[i] = ot::squared_w2(pred.states[i], truth.states[i]).cost;
      norm[i] = truth.states[i].rowwise().squaredNorm().mean();
    }
  });
  double w2_sum = 0.0, norm_sum = 0.0;
  for (std::size_t i = 0; i < n_slices; ++i) {
    if (norm[i] < kGuard) {
      ++out.excluded;
      out.err_y_per_slice.push_back(0.0);
      continue;
    }
    out.err_y_per_slice.push_back(w2[i] / norm[i]);
    w2_sum += w2[i];
    norm_sum += norm[i];
  }
  out.err_y = norm_sum > kGuard ? w2_sum / norm_sum : 0.0;

  // RHS ensembles at states sampled from the truth trajectories.
  const int n_traj = static_cast<int>(truth.states[0].rows());
  struct Probe {
    Vec state;
  };
  std::vector<Probe> probes;
  RngStream pick(derive_seed(seed, kTagEval, 7));
  for (std::size_t i = 0; i < n_slices; ++i) {
    for (int s = 0; s < states_per_slice; ++s) {
      const int r = static_cast<int>(pick.below(static_cast<std::uint64_t>(n_traj)));
      probes.push_back({truth.states[i].row(r).transpose()});
    }
  }

  std::vector<double> f_w2(probes.size(), 0.0);
  std::vector<double> f_norm(probes.size(), 0.0);
  parallel_chunks(probes.size(), 4, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      RngStream rng(derive_seed(seed, kTagEval, 1000 + p));
      Mat truth_rhs(k_f, kStateDim);
      for (int s = 0; s < k_f; ++s) {
        const Vec c = sample_damping(config.d, config.sigma, rng);
        truth_rhs.row(s) = oscillator_rhs(probes[p].state, c).transpose();
      }
      Mat pred_rhs(k_f, kStateDim);
      for (int s = 0; s < k_f; ++s) {
        pred_rhs.row(s) = snn::forward(surrogate, probes[p].state, rng).transpose();
      }
      f_w2[p] = ot::squared_w2(pred_rhs, truth_rhs).cost;
      f_norm[p] = truth_rhs.rowwise().squaredNorm().mean();
    }
  });
  double fw = 0.0, fn = 0.0;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    fw += f_w2[p];
    fn += f_norm[p];
  }
  out.err_f = fn > kGuard ? fw / fn : 0.0;
  return out;
}

}  // namespace w2snn::experiments
