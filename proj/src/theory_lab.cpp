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

#include "w2snn/theory_lab.hpp"

#include <cmath>
#include <string>

#include "w2snn/errors.hpp"
#include "w2snn/ot.hpp"
#include "w2snn/parallel.hpp"

namespace w2snn::lab {

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) {
    throw ConfigError("fit_loglog needs at least 3 matching points");
  }
  SlopeFit fit;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0.0 || y[i] <= 0.0) {
      throw NumericError("fit_loglog: non-positive point at index " + std::to_string(i));
    }
    fit.log_x.push_back(std::log(x[i]));
    fit.log_y.push_back(std::log(y[i]));
  }
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += fit.log_x[i];
    sy += fit.log_y[i];
    sxx += fit.log_x[i] * fit.log_x[i];
    sxy += fit.log_x[i] * fit.log_y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) throw NumericError("fit_loglog: degenerate abscissae");
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = fit.log_y[i] - (fit.intercept + fit.slope * fit.log_x[i]);
    rss += r * r;
  }
  fit.residual_rms = std::sqrt(rss / n);
  const double sxx_centered = sxx - sx * sx / n;
  if (n > 2.0 && sxx_centered > 0.0) {
    fit.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx_centered);
  }
  if (!std::isfinite(fit.slope) || !std::isfinite(fit.intercept)) {
    throw NumericError("fit_loglog: non-finite fit");
  }
  return fit;
}

namespace {

double ratio_product(int d, const std::vector<double>& ratios) {
  if (static_cast<int>(ratios.size()) != d) {
    throw ConfigError("bound: need exactly d sigma ratios, got " +
                      std::to_string(ratios.size()));
  }
  if (std::abs(ratios[0] - 1.0) > 1e-12) throw ConfigError("bound: first ratio must be 1");
  double prod = 1.0;
  for (double r : ratios) {
    if (r <= 0.0 || r > 1.0) {
      throw ConfigError("bound: ratios must lie in (0, 1]; got " + std::to_string(r));
    }
    prod *= r;
  }
  return prod;
}

}  // namespace

double h_bound(const BoundInputs& in) {
  if (in.n < 1.0) throw ConfigError("h_bound: N must be >= 1");
  if (in.d < 1) throw ConfigError("h_bound: d must be >= 1");
  if (in.d <= 4) {
    return 2.0 * std::pow(in.n, -0.25) * std::sqrt(std::log1p(in.n));
  }
  const double prod = ratio_product(in.d, in.ratios);
  if (prod <= 0.0) throw ConfigError("h_bound: ratio product must be positive for d > 4");
  return 2.0 * (std::pow(in.n, -0.25) + std::pow(prod * in.n, -1.0 / in.d));
}

double full_bound(const BoundInputs& in) {
  if (!in.m0 || !in.lipschitz || !in.delta || !in.c) {
    throw ConfigError("full_bound: M0, Lipschitz constant, delta and C must all be provided");
  }
  const double h = h_bound(in);
  return 4.0 * *in.m0 / std::sqrt(in.n) + 8.0 * *in.c * *in.m0 * h +
         8.0 * std::sqrt(*in.m0) * *in.lipschitz * *in.delta;
}

double h_crossover_n(int d, const std::vector<double>& ratios) {
  if (d <= 4) throw ConfigError("h_crossover_n applies to the d > 4 branch only");
  const double prod = ratio_product(d, ratios);
  // N^{-1/4} = (prod * N)^{-1/d}  =>  ln N = 4 ln(prod) / (d - 4).
  return std::exp(4.0 * std::log(prod) / (d - 4));
}

void RateStudyConfig::validate() const {
  if (d < 1) throw ConfigError("rate study: d must be >= 1");
  if (scale < 0.0) throw ConfigError("rate study: scale must be >= 0");
  if (replicates < 5) throw ConfigError("rate study: need at least 5 replicates");
  if (n_grid.empty()) throw ConfigError("rate study: empty N grid");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 2 || n_grid[i] > 1024) {
      throw ConfigError("rate study: N must lie in [2, 1024]");
    }
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) {
      throw ConfigError("rate study: N grid must be strictly increasing");
    }
  }
}

std::vector<double> RateStudyConfig::sigmas() const {
  std::vector<double> out(static_cast<std::size_t>(d), scale);
  if (heterogeneous) {
    for (int i = 1; i <= d; ++i) {
      out[static_cast<std::size_t>(i - 1)] = scale * std::exp(-c0 * i);
    }
  }
  return out;
}

RateStudyResult two_sample_w2_rate(const RateStudyConfig& config) {
  config.validate();
  const std::vector<double> sig = config.sigmas();

  RateStudyResult result;
  result.n_grid = config.n_grid;
  // Sixth moment of a centered Gaussian coordinate is 15 sigma^6.
  double m6 = 0.0;
  for (double s : sig) m6 += 15.0 * std::pow(s, 6);
  result.moment_m = std::pow(m6, 1.0 / 6.0);

  auto draw = [&](int n, RngStream& rng) {
    ot::EmpiricalMeasure m(n, config.d);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < config.d; ++j) {
        m(i, j) = sig[static_cast<std::size_t>(j)] * rng.normal();
      }
    }
    return m;
  };

  const std::size_t total = config.n_grid.size() * static_cast<std::size_t>(config.replicates);
  std::vector<double> costs(total, 0.0);
  parallel_chunks(total, 2, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t ni = k / static_cast<std::size_t>(config.replicates);
      const std::size_t rep = k % static_cast<std::size_t>(config.replicates);
      const int n = config.n_grid[ni];
      // Substreams keyed by (N, replicate, side) only, so studies that differ
      // just in the sigma pattern stay pair-matched draw for draw.
      RngStream ra(derive_seed(config.seed, kTagRate,
                               static_cast<std::uint64_t>(n) * 2048 + 2 * rep));
      RngStream rb(derive_seed(config.seed, kTagRate,
                               static_cast<std::uint64_t>(n) * 2048 + 2 * rep + 1));
      const ot::EmpiricalMeasure a = draw(n, ra);
      const ot::EmpiricalMeasure b = draw(n, rb);
      costs[k] = ot::squared_w2(a, b).cost;
    }
  });

  std::vector<double> n_values;
  for (std::size_t ni = 0; ni < config.n_grid.size(); ++ni) {
    double mean = 0.0;
    for (int r = 0; r < config.replicates; ++r) {
      mean += costs[ni * static_cast<std::size_t>(config.replicates) + static_cast<std::size_t>(r)];
    }
    mean /= config.replicates;
    double var = 0.0;
    for (int r = 0; r < config.replicates; ++r) {
      const double dcost =
          costs[ni * static_cast<std::size_t>(config.replicates) + static_cast<std::size_t>(r)] -
          mean;
      var += dcost * dcost;
    }
    var /= std::max(1, config.replicates - 1);
    result.mean_cost.push_back(mean);
    result.std_error.push_back(std::sqrt(var / config.replicates));
    n_values.push_back(static_cast<double>(config.n_grid[ni]));
  }
  bool fittable = n_values.size() >= 3;
  for (double m : result.mean_cost) fittable = fittable && m > 0.0;
  if (fittable) result.fit = fit_loglog(n_values, result.mean_cost);
  return result;
}

std::pair<RateStudyResult, RateStudyResult> heterogeneity_comparison(
    int d, double c0, const std::vector<int>& n_grid, int replicates, std::uint64_t seed) {
  if (d <= 4) {
    throw ConfigError("heterogeneity comparison targets the d > 4 regime, got d = " +
                      std::to_string(d));
  }
  RateStudyConfig hom;
  hom.d = d;
  hom.heterogeneous = false;
  hom.n_grid = n_grid;
  hom.replicates = replicates;
  hom.seed = seed;
  RateStudyConfig het = hom;
  het.heterogeneous = true;
  het.c0 = c0;
  return {two_sample_w2_rate(hom), two_sample_w2_rate(het)};
}

Eigen::VectorXd perturbation_direction(const snn::SNNParams& base, bool bias_only,
                                       std::uint64_t seed) {
  RngStream rng(derive_seed(seed, kTagDirection));
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(base.asb_size());
  if (bias_only) {
    // Support on the output layer's bias block only.
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < base.layers.size(); ++l) {
      at += 2 * base.layers[l].a.size();
      const Eigen::Index b_len = base.layers[l].b.size();
      if (l + 1 == base.layers.size()) {
        for (Eigen::Index i = 0; i < b_len; ++i) dir(at + i) = rng.normal();
      }
      at += b_len;
    }
  } else {
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = rng.normal();
  }
  const double norm = dir.norm();
  if (norm <= 0.0) throw NumericError("perturbation direction degenerated to zero");
  return dir / norm;
}

RobustnessResult robustness_slope(const snn::SNNParams& base, const Eigen::VectorXd& x,
                                  const std::vector<double>& eps_grid, int k, int repeats,
                                  int floor_repeats, bool bias_only, std::uint64_t seed) {
  if (eps_grid.empty()) throw ConfigError("robustness: empty eps grid");
  for (std::size_t i = 1; i < eps_grid.size(); ++i) {
    if (eps_grid[i] <= eps_grid[i - 1] || eps_grid[i - 1] < 0.0) {
      throw ConfigError("robustness: eps grid must be increasing and non-negative");
    }
  }
  if (k < 2 || repeats < 1 || floor_repeats < 1) {
    throw ConfigError("robustness: need K >= 2 and positive repeat counts");
  }
  if (base.config.activation != ad::Activation::kRelu) {
    throw ConfigError("robustness: the slope study assumes a ReLU network");
  }

  RobustnessResult result;
  result.eps_grid = eps_grid;
  result.direction = perturbation_direction(base, bias_only, seed);

  std::vector<snn::SNNParams> perturbed;
  perturbed.reserve(eps_grid.size());
  for (double eps : eps_grid) perturbed.push_back(snn::perturb(base, result.direction, eps));

  // Base ensembles are shared across the floor and every eps column, so they
  // are drawn once per repeat. Perturbed ensembles replay the same stream
  // (the Gaussian coupling); the floor column uses an independent stream.
  const int gen_repeats = std::max(repeats, floor_repeats);
  std::vector<ot::EmpiricalMeasure> base_ens(static_cast<std::size_t>(gen_repeats));
  std::vector<ot::EmpiricalMeasure> indep_ens(static_cast<std::size_t>(floor_repeats));
  parallel_chunks(static_cast<std::size_t>(gen_repeats), 1,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t r = begin; r < end; ++r) {
                      RngStream base_rng(derive_seed(seed, kTagRobust, r, 0));
                      base_ens[r] = snn::forward_ensemble(base, x, k, base_rng);
                      if (r < static_cast<std::size_t>(floor_repeats)) {
                        RngStream indep_rng(derive_seed(seed, kTagRobust, r, 1));
                        indep_ens[r] = snn::forward_ensemble(base, x, k, indep_rng);
                      }
                    }
                  });

  const std::size_t cells =
      static_cast<std::size_t>(floor_repeats) + eps_grid.size() * static_cast<std::size_t>(repeats);
  std::vector<double> cost(cells, 0.0);
  parallel_chunks(cells, 1, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t cell = begin; cell < end; ++cell) {
      if (cell < static_cast<std::size_t>(floor_repeats)) {
        cost[cell] = ot::squared_w2(base_ens[cell], indep_ens[cell]).cost;
      } else {
        const std::size_t idx = cell - static_cast<std::size_t>(floor_repeats);
        const std::size_t e = idx / static_cast<std::size_t>(repeats);
        const std::size_t rep = idx % static_cast<std::size_t>(repeats);
        RngStream paired_rng(derive_seed(seed, kTagRobust, rep, 0));
        const ot::EmpiricalMeasure ens_pert =
            snn::forward_ensemble(perturbed[e], x, k, paired_rng);
        cost[cell] = ot::squared_w2(base_ens[rep], ens_pert).cost;
      }
    }
  });

  for (int r = 0; r < floor_repeats; ++r) result.floor += cost[static_cast<std::size_t>(r)];
  result.floor /= floor_repeats;

  std::vector<double> fit_eps;
  std::vector<double> fit_cost;
  for (std::size_t e = 0; e < eps_grid.size(); ++e) {
    double m = 0.0;
    for (int r = 0; r < repeats; ++r) {
      m += cost[static_cast<std::size_t>(floor_repeats) + e * static_cast<std::size_t>(repeats) +
                static_cast<std::size_t>(r)];
    }
    m /= repeats;
    result.mean_w2.push_back(m);
    const bool ok = eps_grid[e] > 0.0 && m > 3.0 * result.floor;
    result.cleared.push_back(ok);
    if (ok) {
      fit_eps.push_back(eps_grid[e]);
      fit_cost.push_back(m);
    }
  }
  if (fit_cost.size() < 3) {
    result.conclusive = false;
    result.advice = "fewer than 3 eps values clear 3x the finite-sample floor (" +
                    std::to_string(result.floor) + "); raise K or extend the eps grid";
    return result;
  }
  result.fit = fit_loglog(fit_eps, fit_cost);
  result.conclusive = true;
  return result;
}

}  // namespace w2snn::lab
