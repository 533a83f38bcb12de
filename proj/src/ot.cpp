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

#include "w2snn/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "w2snn/errors.hpp"

namespace w2snn::ot {

namespace {

constexpr double kBig = std::numeric_limits<double>::max() / 4.0;

void check_pair(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.rows() < 1 || b.rows() < 1) {
    throw DimensionError("empirical measures need at least one point");
  }
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("measure size mismatch: " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
}

// Row-major pairwise squared Euclidean distances.
std::vector<double> cost_matrix(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  const int n = static_cast<int>(a.rows());
  const int d = static_cast<int>(a.cols());
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> ar = a;
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> br = b;
  std::vector<double> cost(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const double* pa = ar.data() + static_cast<std::size_t>(i) * d;
    double* row = cost.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* pb = br.data() + static_cast<std::size_t>(j) * d;
      double s = 0.0;
      for (int k = 0; k < d; ++k) {
        const double diff = pa[k] - pb[k];
        s += diff * diff;
      }
      if (!std::isfinite(s)) {
        throw NumericError("non-finite cost entry at (" + std::to_string(i) + "," +
                           std::to_string(j) + ")");
      }
      row[j] = s;
    }
  }
  return cost;
}

}  // namespace

// Jonker-Volgenant shortest augmenting path algorithm for the dense linear
// assignment problem (Computing 38, 1987). Ties break on the lowest scan
// index, so the result is a pure function of the cost matrix.
double solve_assignment(const std::vector<double>& cost, int n, std::vector<int>& row_to_col) {
  auto c = [&](int i, int j) -> double { return cost[static_cast<std::size_t>(i) * n + j]; };

  row_to_col.assign(n, -1);
  std::vector<int> col_to_row(n, -1);
  std::vector<double> v(n, 0.0);
  std::vector<int> matches(n, 0);
  std::vector<int> free_rows(n, 0);
  int num_free = 0;

  // Column reduction, reverse column order.
  for (int j = n - 1; j >= 0; --j) {
    double min = c(0, j);
    int imin = 0;
    for (int i = 1; i < n; ++i) {
      if (c(i, j) < min) {
        min = c(i, j);
        imin = i;
      }
    }
    v[j] = min;
    if (++matches[imin] == 1) {
      row_to_col[imin] = j;
      col_to_row[j] = imin;
    } else {
      col_to_row[j] = -1;
    }
  }

  // Reduction transfer from rows assigned exactly once.
  for (int i = 0; i < n; ++i) {
    if (matches[i] == 0) {
      free_rows[num_free++] = i;
    } else if (matches[i] == 1) {
      const int j1 = row_to_col[i];
      double min = kBig;
      for (int j = 0; j < n; ++j) {
        if (j != j1 && c(i, j) - v[j] < min) min = c(i, j) - v[j];
      }
      v[j1] -= min;
    }
  }

  // Augmenting row reduction, two sweeps. Displaced rows are deferred to the
  // next sweep rather than reprocessed in place: with continuous costs exact
  // ties are measure-zero, and the in-place requeue of the integer-cost
  // formulation then chases alternating paths for millions of steps.
  for (int loop = 0; loop < 2; ++loop) {
    int k = 0;
    const int prev_num_free = num_free;
    num_free = 0;
    while (k < prev_num_free) {
      const int i = free_rows[k++];
      // Minimum and second minimum reduced cost over columns.
      double umin = c(i, 0) - v[0];
      double usubmin = kBig;
      int j1 = 0;
      int j2 = -1;
      for (int j = 1; j < n; ++j) {
        const double h = c(i, j) - v[j];
        if (h < usubmin) {
          if (h >= umin) {
            usubmin = h;
            j2 = j;
          } else {
            usubmin = umin;
            umin = h;
            j2 = j1;
            j1 = j;
          }
        }
      }
      int i0 = col_to_row[j1];
      if (umin < usubmin) {
        v[j1] -= usubmin - umin;
      } else if (i0 >= 0) {
        j1 = j2;
        i0 = col_to_row[j2];
      }
      row_to_col[i] = j1;
      col_to_row[j1] = i;
      if (i0 >= 0) free_rows[num_free++] = i0;
    }
  }

  // Augment the solution for each remaining free row via shortest alternating
  // paths (Dijkstra over columns with dual-adjusted edge lengths). Flat scans
  // over contiguous arrays; finalized columns carry an infinite work label,
  // so neither the min-reduction nor the relaxation needs an explicit mask.
  std::vector<double> work(n);
  std::vector<double> scanned_d(n);
  std::vector<int> scanned_j(n);
  std::vector<int> pred(n);
  for (int f = 0; f < num_free; ++f) {
    const int free_row = free_rows[f];
    for (int j = 0; j < n; ++j) {
      work[j] = c(free_row, j) - v[j];
      pred[j] = free_row;
    }
    int n_scanned = 0;
    int endofpath = -1;
    double min = 0.0;
    for (;;) {
      double best = work[0];
      for (int j = 1; j < n; ++j) best = std::min(best, work[j]);
      int jmin = 0;
      while (work[jmin] != best) ++jmin;
      min = best;
      if (col_to_row[jmin] < 0) {
        endofpath = jmin;
        break;
      }
      scanned_j[n_scanned] = jmin;
      scanned_d[n_scanned] = best;
      ++n_scanned;
      work[jmin] = kBig;
      const int i = col_to_row[jmin];
      const double h = c(i, jmin) - v[jmin] - best;
      const double* row = cost.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        const double v2 = row[j] - v[j] - h;
        if (v2 < work[j]) {
          work[j] = v2;
          pred[j] = i;
        }
      }
    }

    for (int k = 0; k < n_scanned; ++k) {
      v[scanned_j[k]] += scanned_d[k] - min;
    }

    // Flip assignments along the alternating path back to the free row.
    int i;
    int j1 = endofpath;
    do {
      i = pred[j1];
      col_to_row[j1] = i;
      std::swap(j1, row_to_col[i]);
    } while (i != free_row);
  }

  double total = 0.0;
  for (int i = 0; i < n; ++i) total += c(i, row_to_col[i]);
  return total;
}

Coupling squared_w2(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  check_pair(a, b);
  const int n = static_cast<int>(a.rows());
  Coupling out;
  if (n == 1) {
    out.perm = {0};
    out.cost = (a.row(0) - b.row(0)).squaredNorm();
    return out;
  }
  // Translating either side only adds row/column potentials to the cost
  // matrix, so the optimal matching is unchanged. Solving on mean-centered
  // clouds keeps the matrix well-scaled when the two clouds are far apart
  // relative to their spread; the cost is then taken on the original points.
  const Eigen::RowVectorXd mean_a = a.colwise().mean();
  const Eigen::RowVectorXd mean_b = b.colwise().mean();
  const std::vector<double> cost =
      cost_matrix(a.rowwise() - mean_a, b.rowwise() - mean_b);
  solve_assignment(cost, n, out.perm);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    total += (a.row(i) - b.row(out.perm[static_cast<std::size_t>(i)])).squaredNorm();
  }
  if (!std::isfinite(total)) throw NumericError("squared_w2: non-finite matched cost");
  out.cost = total / n;
  return out;
}

Eigen::MatrixXd coupling_grad(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                              const std::vector<int>& perm) {
  check_pair(a, b);
  const double scale = 2.0 / static_cast<double>(a.rows());
  Eigen::MatrixXd grad(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    grad.row(i) = scale * (a.row(i) - b.row(perm[static_cast<std::size_t>(i)]));
  }
  return grad;
}

Eigen::MatrixXd squared_w2_grad(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  return coupling_grad(a, b, squared_w2(a, b).perm);
}

double squared_w2_1d(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("1-D samples size mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return sum / static_cast<double>(a.size());
}

double brute_force_w2(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  check_pair(a, b);
  const int n = static_cast<int>(a.rows());
  if (n > 8) {
    throw DimensionError("brute_force_w2 is capped at N <= 8, got N = " + std::to_string(n));
  }
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = kBig;
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += (a.row(i) - b.row(perm[i])).squaredNorm();
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / n;
}

}  // namespace w2snn::ot
