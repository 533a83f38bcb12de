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

#include <Eigen/Dense>
#include <vector>

#include "w2snn/autodiff.hpp"
#include "w2snn/rng.hpp"

namespace w2snn::locality {

using Mat = Eigen::MatrixXd;

// One (x, y) observation per row.
struct Dataset {
  Mat xs;  // N x n inputs
  Mat ys;  // N x d outputs
};

// For each input, the sorted indices of all inputs within l2 distance delta
// (boundary inclusive). i is always a member of its own neighborhood.
struct NeighborhoodIndex {
  double delta = 0.0;
  std::vector<std::vector<int>> neighbors;

  int count(int i) const { return static_cast<int>(neighbors[static_cast<std::size_t>(i)].size()); }
  int size() const { return static_cast<int>(neighbors.size()); }
};

// Exact radius search. All-pairs at desk scale; a uniform-grid bucket
// accelerator kicks in above 2000 points (low input dimension only) and
// produces identical results.
NeighborhoodIndex build_index(const Mat& xs, double delta);

// Indices with N(x_i, delta) >= n0, ascending.
std::vector<int> eligible(const NeighborhoodIndex& index, int n0);

struct MinibatchSelection {
  std::vector<int> x0;  // selected reference indices, ascending
  int n_batch = 0;
  int n0 = 0;
  int epoch_update = 0;
};

// Uniform sample without replacement of min(n_batch, |eligible|) indices.
MinibatchSelection select_minibatch(const std::vector<int>& eligible_indices, int n_batch,
                                    RngStream& rng);

// One assignment-solved loss term: squared W2 between prediction and truth
// rows restricted to the neighborhood of `center`. perm matches prediction
// row k (of the restriction) to truth row perm[k].
struct LossTerm {
  int center = -1;
  std::vector<int> rows;
  std::vector<int> perm;
  double cost = 0.0;
};

struct LocalLoss {
  double loss = 0.0;
  std::vector<LossTerm> terms;
};

// Numeric core of the minibatch local squared W2 loss. preds row i is the
// prediction made at input x_i. Terms are solved independently (in parallel)
// and reduced in selection order.
LocalLoss local_w2_terms(const Mat& truth_ys, const Mat& preds, const MinibatchSelection& sel,
                         const NeighborhoodIndex& index);

// d(loss)/d(preds) for the solved terms, envelope style (matchings fixed),
// accumulated into grads (N x d, caller-zeroed).
void add_pred_grads(const Mat& truth_ys, const Mat& preds, const LocalLoss& loss, double weight,
                    Mat& grads);

// Differentiable variant: preds[i] is a d x 1 Value for dataset row i (only
// rows inside selected neighborhoods are read). Returns a scalar Value.
ad::Value local_w2_loss(ad::Graph& g, const Dataset& truth, const std::vector<ad::Value>& preds,
                        const MinibatchSelection& sel, const NeighborhoodIndex& index);

// Time-decoupled trajectory loss: mean over time slices of the local loss
// applied to the per-slice state clouds; neighborhoods are built once over
// the trajectories' initial states.
struct TimeDecoupledLoss {
  double loss = 0.0;
  std::vector<LocalLoss> slices;
};

TimeDecoupledLoss time_decoupled_terms(const std::vector<Mat>& truth_slices,
                                       const std::vector<Mat>& pred_slices,
                                       const MinibatchSelection& sel,
                                       const NeighborhoodIndex& index);

ad::Value time_decoupled_loss(ad::Graph& g, const std::vector<Mat>& truth_slices,
                              const std::vector<std::vector<ad::Value>>& pred_states,
                              const MinibatchSelection& sel, const NeighborhoodIndex& index);

}  // namespace w2snn::locality
