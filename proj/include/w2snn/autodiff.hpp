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
#include <functional>
#include <vector>

namespace w2snn::ad {

using Mat = Eigen::MatrixXd;

enum class Op {
  kLeaf,
  kAffine,    // W * x + b
  kRelu,
  kElu,
  kAdd,
  kLincomb,   // sum_k c_k * x_k, constant c_k
  kHadamard,  // x .* C, constant C
  kSquare,
  kSum,
  kConcat,
  kW2Term,    // mean squared distance to matched constant targets
};

enum class Activation { kRelu, kElu };

// Handle into a Graph's tape.
struct Value {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

// Reverse-mode tape over dense matrices/vectors. Vectors are n x 1, scalars
// 1 x 1. Values are computed eagerly at construction; backward walks the tape
// in reverse creation order, so every node is visited exactly once.
//
// A graph instance is single-threaded; distinct instances are independent.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t reserve_nodes) { nodes_.reserve(reserve_nodes); }

  // Owning leaf.
  Value leaf(Mat v);
  // Leaf whose value lives outside the graph; the referenced matrix must stay
  // alive and unmodified while the graph is in use.
  Value leaf(const Mat* v);

  Value affine(Value weights, Value input, Value bias);
  Value activation(Value x, Activation kind);
  Value relu(Value x) { return activation(x, Activation::kRelu); }
  Value elu(Value x) { return activation(x, Activation::kElu); }
  Value add(Value a, Value b);
  Value scale(double c, Value x);
  Value lincomb(const std::vector<double>& coeffs, const std::vector<Value>& xs);
  Value hadamard(Value x, Mat factor);
  Value square(Value x);
  Value sum(Value x);
  Value concat(const std::vector<Value>& xs);

  // Scalar node: (1/N) * sum_i |pred_i - matched_target_i|^2, where
  // matched_targets row i pairs with pred_rows[i] (column vectors of size d).
  // The matching is held fixed in backward (envelope gradient).
  Value w2_term(const std::vector<Value>& pred_rows, Mat matched_targets);

  // Accumulates d(loss)/d(leaf) into every reachable leaf's grad. Repeated
  // calls without zero_grad() keep accumulating. Non-scalar loss is a
  // contract violation.
  void backward(Value loss);

  void zero_grad();

  const Mat& value(Value v) const;
  const Mat& grad(Value v) const;
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Op op;
    Mat value;
    const Mat* ext = nullptr;  // external leaf storage
    Mat grad;
    bool touched = false;
    std::vector<int> parents;
    Mat aux;                    // Hadamard factor / W2Term matched targets
    std::vector<double> coeffs; // Lincomb weights
  };

  const Mat& val(int idx) const {
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    return n.ext ? *n.ext : n.value;
  }
  Value push(Node n);
  void accumulate(int parent, const Mat& contribution);
  int check(Value v) const;

  std::vector<Node> nodes_;
};

// Max over coordinates of |analytic - central difference| / max(1, |analytic|)
// at the point theta, with central-difference step h > 0. Throws NumericError
// if f(theta) is not finite.
double grad_check(const std::function<double(const Eigen::VectorXd&)>& f,
                  const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& analytic_grad,
                  const Eigen::VectorXd& theta, double h);

}  // namespace w2snn::ad
