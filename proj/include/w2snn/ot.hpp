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

namespace w2snn::ot {

// An empirical measure is an N x d point cloud where every row carries
// mass 1/N.
using EmpiricalMeasure = Eigen::MatrixXd;

// Optimal matching between two equal-size empirical measures.
// cost is the achieved mean squared distance, i.e. the squared W2 distance:
//   cost = (1/N) * sum_i |A_i - B_{perm[i]}|^2
struct Coupling {
  std::vector<int> perm;
  double cost = 0.0;
};

// Exact squared Wasserstein-2 distance between two equal-size empirical
// measures, solved as a linear assignment problem on the pairwise squared
// Euclidean cost matrix (Jonker-Volgenant shortest augmenting path).
// Deterministic under cost ties.
Coupling squared_w2(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

// Gradient of squared_w2(a, b).cost with respect to a's rows, holding the
// optimal matching fixed: (2/N) * (A_i - B_{perm[i]}).
Eigen::MatrixXd squared_w2_grad(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
Eigen::MatrixXd coupling_grad(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                              const std::vector<int>& perm);

// 1-D squared W2: optimal transport between sorted samples.
double squared_w2_1d(std::vector<double> a, std::vector<double> b);

// Exhaustive minimum over all N! matchings; test oracle, N <= 8.
double brute_force_w2(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

// Dense linear assignment (square matrix, row-major flat costs). Returns the
// minimal total cost; row_to_col[i] is the column matched to row i.
double solve_assignment(const std::vector<double>& cost, int n, std::vector<int>& row_to_col);

}  // namespace w2snn::ot
