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

#include "w2snn/locality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>

#include "w2snn/errors.hpp"
#include "w2snn/ot.hpp"
#include "w2snn/parallel.hpp"

namespace w2snn::locality {

namespace {

NeighborhoodIndex all_pairs_index(const Mat& xs, double delta) {
  const int n = static_cast<int>(xs.rows());
  const double d2 = delta * delta;
  NeighborhoodIndex index;
  index.delta = delta;
  index.neighbors.assign(static_cast<std::size_t>(n), {});
  for (auto& v : index.neighbors) v.reserve(8);
  parallel_chunks(static_cast<std::size_t>(n), 64,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t i = begin; i < end; ++i) {
                      auto& list = index.neighbors[i];
                      for (int j = 0; j < n; ++j) {
                        const double dist2 =
                            (xs.row(static_cast<Eigen::Index>(i)) - xs.row(j)).squaredNorm();
                        if (dist2 <= d2) list.push_back(j);
                      }
                    }
                  });
  return index;
}

// Uniform grid with cell size delta; neighbors can only live in adjacent
// cells. Comparison arithmetic matches the all-pairs path exactly.
NeighborhoodIndex grid_index(const Mat& xs, double delta) {
  const int n = static_cast<int>(xs.rows());
  const int dim = static_cast<int>(xs.cols());
  const double d2 = delta * delta;

  auto cell_of = [&](int i, int k) -> std::int64_t {
    return static_cast<std::int64_t>(std::floor(xs(i, k) / delta));
  };
  auto key_of = [&](const std::int64_t* c) {
    std::uint64_t h = 1469598103934665603ull;
    for (int k = 0; k < dim; ++k) {
      h ^= static_cast<std::uint64_t>(c[k]) + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    }
    return h;
  };

  std::unordered_map<std::uint64_t, std::vector<int>> buckets;
  buckets.reserve(static_cast<std::size_t>(n));
  std::vector<std::int64_t> cells(static_cast<std::size_t>(n) * dim);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) cells[static_cast<std::size_t>(i) * dim + k] = cell_of(i, k);
    buckets[key_of(&cells[static_cast<std::size_t>(i) * dim])].push_back(i);
  }

  NeighborhoodIndex index;
  index.delta = delta;
  index.neighbors.assign(static_cast<std::size_t>(n), {});
  const int span = dim == 1 ? 3 : (dim == 2 ? 9 : 27);
  parallel_chunks(static_cast<std::size_t>(n), 64, [&](std::size_t, std::size_t begin,
                                                       std::size_t end) {
    std::int64_t probe[3];
    for (std::size_t i = begin; i < end; ++i) {
      auto& list = index.neighbors[i];
      const std::int64_t* c = &cells[i * static_cast<std::size_t>(dim)];
      for (int off = 0; off < span; ++off) {
        int rem = off;
        for (int k = 0; k < dim; ++k) {
          probe[k] = c[k] + (rem % 3) - 1;
          rem /= 3;
        }
        auto it = buckets.find(key_of(probe));
        if (it == buckets.end()) continue;
        for (int j : it->second) {
          const double dist2 = (xs.row(static_cast<Eigen::Index>(i)) - xs.row(j)).squaredNorm();
          if (dist2 <= d2) list.push_back(j);
        }
      }
      std::sort(list.begin(), list.end());
    }
  });
  return index;
}

}  // namespace

NeighborhoodIndex build_index(const Mat& xs, double delta) {
  if (delta <= 0.0) throw ConfigError("build_index: delta must be > 0");
  if (xs.rows() < 1) throw ConfigError("build_index: need at least one point");
  if (!xs.allFinite()) throw NumericError("build_index: non-finite input coordinates");
  if (xs.rows() > 2000 && xs.cols() <= 3) return grid_index(xs, delta);
  return all_pairs_index(xs, delta);
}

std::vector<int> eligible(const NeighborhoodIndex& index, int n0) {
  if (n0 < 1) throw ConfigError("eligible: N0 must be >= 1");
  std::vector<int> out;
  for (int i = 0; i < index.size(); ++i) {
    if (index.count(i) >= n0) out.push_back(i);
  }
  return out;
}

MinibatchSelection select_minibatch(const std::vector<int>& eligible_indices, int n_batch,
                                    RngStream& rng) {
  if (eligible_indices.empty()) {
    throw ConfigError(
        "no eligible reference points: every neighborhood has fewer than N0 samples; "
        "increase delta or decrease N0");
  }
  MinibatchSelection sel;
  sel.n_batch = n_batch;
  sel.x0 = rng.sample_without_replacement(eligible_indices, static_cast<std::size_t>(n_batch));
  std::sort(sel.x0.begin(), sel.x0.end());
  return sel;
}

LocalLoss local_w2_terms(const Mat& truth_ys, const Mat& preds, const MinibatchSelection& sel,
                         const NeighborhoodIndex& index) {
  if (preds.rows() != truth_ys.rows() || preds.cols() != truth_ys.cols()) {
    throw DimensionError("local loss: predictions must be row-aligned with truth outputs");
  }
  LocalLoss out;
  out.terms.resize(sel.x0.size());
  parallel_chunks(sel.x0.size(), 4, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      LossTerm& term = out.terms[t];
      term.center = sel.x0[t];
      term.rows = index.neighbors[static_cast<std::size_t>(term.center)];
      const int m = static_cast<int>(term.rows.size());
      Mat p(m, preds.cols());
      Mat y(m, preds.cols());
      for (int k = 0; k < m; ++k) {
        p.row(k) = preds.row(term.rows[static_cast<std::size_t>(k)]);
        y.row(k) = truth_ys.row(term.rows[static_cast<std::size_t>(k)]);
      }
      ot::Coupling c = ot::squared_w2(p, y);
      term.perm = std::move(c.perm);
      term.cost = c.cost;
    }
  });
  for (const LossTerm& term : out.terms) out.loss += term.cost;
  if (!out.terms.empty()) out.loss /= static_cast<double>(out.terms.size());
  return out;
}

void add_pred_grads(const Mat& truth_ys, const Mat& preds, const LocalLoss& loss, double weight,
                    Mat& grads) {
  for (const LossTerm& term : loss.terms) {
    const double scale =
        weight * 2.0 / (static_cast<double>(term.rows.size()) * loss.terms.size());
    for (std::size_t k = 0; k < term.rows.size(); ++k) {
      const int row = term.rows[k];
      const int match = term.rows[static_cast<std::size_t>(term.perm[k])];
      grads.row(row) += scale * (preds.row(row) - truth_ys.row(match));
    }
  }
}

ad::Value local_w2_loss(ad::Graph& g, const Dataset& truth, const std::vector<ad::Value>& preds,
                        const MinibatchSelection& sel, const NeighborhoodIndex& index) {
  if (static_cast<Eigen::Index>(preds.size()) != truth.ys.rows()) {
    throw DimensionError("local loss: need one prediction value per dataset row");
  }
  // Current prediction values, gathered once for the assignment solves.
  Mat pred_mat(truth.ys.rows(), truth.ys.cols());
  for (Eigen::Index i = 0; i < pred_mat.rows(); ++i) {
    if (preds[static_cast<std::size_t>(i)].valid()) {
      pred_mat.row(i) = g.value(preds[static_cast<std::size_t>(i)]).col(0).transpose();
    } else {
      pred_mat.row(i).setZero();
    }
  }
  const LocalLoss numeric = local_w2_terms(truth.ys, pred_mat, sel, index);

  std::vector<ad::Value> term_values;
  term_values.reserve(numeric.terms.size());
  for (const LossTerm& term : numeric.terms) {
    std::vector<ad::Value> rows;
    Mat matched(static_cast<Eigen::Index>(term.rows.size()), truth.ys.cols());
    for (std::size_t k = 0; k < term.rows.size(); ++k) {
      rows.push_back(preds[static_cast<std::size_t>(term.rows[k])]);
      matched.row(static_cast<Eigen::Index>(k)) =
          truth.ys.row(term.rows[static_cast<std::size_t>(term.perm[k])]);
    }
    term_values.push_back(g.w2_term(rows, std::move(matched)));
  }
  const std::vector<double> coeffs(term_values.size(),
                                   1.0 / static_cast<double>(term_values.size()));
  return g.lincomb(coeffs, term_values);
}

TimeDecoupledLoss time_decoupled_terms(const std::vector<Mat>& truth_slices,
                                       const std::vector<Mat>& pred_slices,
                                       const MinibatchSelection& sel,
                                       const NeighborhoodIndex& index) {
  if (truth_slices.size() != pred_slices.size() || truth_slices.empty()) {
    throw DimensionError("time-decoupled loss: ensembles must share the time grid");
  }
  TimeDecoupledLoss out;
  out.slices.reserve(truth_slices.size());
  for (std::size_t s = 0; s < truth_slices.size(); ++s) {
    out.slices.push_back(local_w2_terms(truth_slices[s], pred_slices[s], sel, index));
    out.loss += out.slices.back().loss;
  }
  out.loss /= static_cast<double>(truth_slices.size());
  return out;
}

ad::Value time_decoupled_loss(ad::Graph& g, const std::vector<Mat>& truth_slices,
                              const std::vector<std::vector<ad::Value>>& pred_states,
                              const MinibatchSelection& sel, const NeighborhoodIndex& index) {
  if (truth_slices.size() != pred_states.size() || truth_slices.empty()) {
    throw DimensionError("time-decoupled loss: ensembles must share the time grid");
  }
  std::vector<ad::Value> slice_values;
  slice_values.reserve(truth_slices.size());
  for (std::size_t s = 0; s < truth_slices.size(); ++s) {
    Dataset slice;
    slice.ys = truth_slices[s];
    slice.xs = Mat::Zero(truth_slices[s].rows(), 1);  // unused by local_w2_loss
    slice_values.push_back(local_w2_loss(g, slice, pred_states[s], sel, index));
  }
  const std::vector<double> coeffs(slice_values.size(),
                                   1.0 / static_cast<double>(slice_values.size()));
  return g.lincomb(coeffs, slice_values);
}

}  // namespace w2snn::locality
