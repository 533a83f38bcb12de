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

#include "w2snn/autodiff.hpp"

#include <cmath>
#include <string>

#include "w2snn/errors.hpp"

namespace w2snn::ad {

namespace {
std::string shape(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}
}  // namespace

int Graph::check(Value v) const {
  if (v.idx < 0 || v.idx >= static_cast<int>(nodes_.size())) {
    throw DimensionError("value handle does not belong to this graph");
  }
  return v.idx;
}

Value Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return Value{static_cast<int>(nodes_.size()) - 1};
}

Value Graph::leaf(Mat v) {
  Node n;
  n.op = Op::kLeaf;
  n.grad = Mat::Zero(v.rows(), v.cols());
  n.value = std::move(v);
  return push(std::move(n));
}

Value Graph::leaf(const Mat* v) {
  Node n;
  n.op = Op::kLeaf;
  n.ext = v;
  n.grad = Mat::Zero(v->rows(), v->cols());
  return push(std::move(n));
}

Value Graph::affine(Value weights, Value input, Value bias) {
  const Mat& w = val(check(weights));
  const Mat& x = val(check(input));
  const Mat& b = val(check(bias));
  if (w.cols() != x.rows() || x.cols() != 1 || b.rows() != w.rows() || b.cols() != 1) {
    throw DimensionError("affine shape mismatch: weights " + shape(w) + ", input " + shape(x) +
                         ", bias " + shape(b));
  }
  Node n;
  n.op = Op::kAffine;
  n.parents = {weights.idx, input.idx, bias.idx};
  n.value.noalias() = w * x;
  n.value += b;
  return push(std::move(n));
}

Value Graph::activation(Value x, Activation kind) {
  const Mat& in = val(check(x));
  Node n;
  n.op = kind == Activation::kRelu ? Op::kRelu : Op::kElu;
  n.parents = {x.idx};
  if (kind == Activation::kRelu) {
    n.value = in.cwiseMax(0.0);
  } else {
    n.value = in.unaryExpr([](double t) { return t >= 0.0 ? t : std::expm1(t); });
  }
  return push(std::move(n));
}

Value Graph::add(Value a, Value b) {
  const Mat& x = val(check(a));
  const Mat& y = val(check(b));
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw DimensionError("add shape mismatch: " + shape(x) + " vs " + shape(y));
  }
  Node n;
  n.op = Op::kAdd;
  n.parents = {a.idx, b.idx};
  n.value = x + y;
  return push(std::move(n));
}

Value Graph::scale(double c, Value x) { return lincomb({c}, {x}); }

Value Graph::lincomb(const std::vector<double>& coeffs, const std::vector<Value>& xs) {
  if (coeffs.size() != xs.size() || xs.empty()) {
    throw DimensionError("lincomb needs matching, non-empty coefficient and value lists");
  }
  Node n;
  n.op = Op::kLincomb;
  n.coeffs = coeffs;
  const Mat& first = val(check(xs[0]));
  n.value = coeffs[0] * first;
  n.parents.push_back(xs[0].idx);
  for (std::size_t k = 1; k < xs.size(); ++k) {
    const Mat& xk = val(check(xs[k]));
    if (xk.rows() != first.rows() || xk.cols() != first.cols()) {
      throw DimensionError("lincomb shape mismatch: " + shape(first) + " vs " + shape(xk));
    }
    n.value += coeffs[k] * xk;
    n.parents.push_back(xs[k].idx);
  }
  return push(std::move(n));
}

Value Graph::hadamard(Value x, Mat factor) {
  const Mat& in = val(check(x));
  if (in.rows() != factor.rows() || in.cols() != factor.cols()) {
    throw DimensionError("hadamard shape mismatch: " + shape(in) + " vs " + shape(factor));
  }
  Node n;
  n.op = Op::kHadamard;
  n.parents = {x.idx};
  n.value = in.cwiseProduct(factor);
  n.aux = std::move(factor);
  return push(std::move(n));
}

Value Graph::square(Value x) {
  const Mat& in = val(check(x));
  Node n;
  n.op = Op::kSquare;
  n.parents = {x.idx};
  n.value = in.cwiseProduct(in);
  return push(std::move(n));
}

Value Graph::sum(Value x) {
  const Mat& in = val(check(x));
  Node n;
  n.op = Op::kSum;
  n.parents = {x.idx};
  n.value = Mat::Constant(1, 1, in.sum());
  return push(std::move(n));
}

Value Graph::concat(const std::vector<Value>& xs) {
  if (xs.empty()) throw DimensionError("concat needs at least one value");
  Eigen::Index rows = 0;
  for (Value v : xs) {
    const Mat& m = val(check(v));
    if (m.cols() != 1) throw DimensionError("concat expects column vectors, got " + shape(m));
    rows += m.rows();
  }
  Node n;
  n.op = Op::kConcat;
  n.value.resize(rows, 1);
  Eigen::Index at = 0;
  for (Value v : xs) {
    const Mat& m = val(v.idx);
    n.value.block(at, 0, m.rows(), 1) = m;
    at += m.rows();
    n.parents.push_back(v.idx);
  }
  return push(std::move(n));
}

Value Graph::w2_term(const std::vector<Value>& pred_rows, Mat matched_targets) {
  if (pred_rows.empty() || static_cast<Eigen::Index>(pred_rows.size()) != matched_targets.rows()) {
    throw DimensionError("w2_term: prediction count must equal matched target rows");
  }
  Node n;
  n.op = Op::kW2Term;
  double cost = 0.0;
  for (std::size_t i = 0; i < pred_rows.size(); ++i) {
    const Mat& p = val(check(pred_rows[i]));
    if (p.cols() != 1 || p.rows() != matched_targets.cols()) {
      throw DimensionError("w2_term: prediction " + shape(p) + " does not match target dim " +
                           std::to_string(matched_targets.cols()));
    }
    cost += (p.col(0).transpose() - matched_targets.row(i)).squaredNorm();
    n.parents.push_back(pred_rows[i].idx);
  }
  n.value = Mat::Constant(1, 1, cost / static_cast<double>(pred_rows.size()));
  n.aux = std::move(matched_targets);
  return push(std::move(n));
}

void Graph::accumulate(int parent, const Mat& contribution) {
  Node& p = nodes_[static_cast<std::size_t>(parent)];
  if (p.op == Op::kLeaf) {
    // Leaf grads persist across backward calls.
    p.grad += contribution;
    p.touched = true;
  } else if (!p.touched) {
    p.grad = contribution;
    p.touched = true;
  } else {
    p.grad += contribution;
  }
}

void Graph::backward(Value loss) {
  const int root = check(loss);
  Node& ln = nodes_[static_cast<std::size_t>(root)];
  if (val(root).rows() != 1 || val(root).cols() != 1) {
    throw DimensionError("backward expects a scalar loss, got " + shape(val(root)));
  }
  for (std::size_t i = 0; i <= static_cast<std::size_t>(root); ++i) {
    if (nodes_[i].op != Op::kLeaf) nodes_[i].touched = false;
  }
  if (ln.op == Op::kLeaf) {
    ln.grad.array() += 1.0;
    return;
  }
  ln.grad = Mat::Constant(1, 1, 1.0);
  ln.touched = true;

  for (int idx = root; idx >= 0; --idx) {
    Node& n = nodes_[static_cast<std::size_t>(idx)];
    if (!n.touched || n.op == Op::kLeaf) continue;
    const Mat& g = n.grad;
    switch (n.op) {
      case Op::kAffine: {
        const Mat& w = val(n.parents[0]);
        const Mat& x = val(n.parents[1]);
        accumulate(n.parents[0], g * x.transpose());
        accumulate(n.parents[1], w.transpose() * g);
        accumulate(n.parents[2], g);
        break;
      }
      case Op::kRelu: {
        const Mat& in = val(n.parents[0]);
        accumulate(n.parents[0],
                   g.cwiseProduct(in.unaryExpr([](double t) { return t > 0.0 ? 1.0 : 0.0; })));
        break;
      }
      case Op::kElu: {
        const Mat& in = val(n.parents[0]);
        Mat d = in.unaryExpr([](double t) { return t >= 0.0 ? 1.0 : std::exp(t); });
        accumulate(n.parents[0], g.cwiseProduct(d));
        break;
      }
      case Op::kAdd:
        accumulate(n.parents[0], g);
        accumulate(n.parents[1], g);
        break;
      case Op::kLincomb:
        for (std::size_t k = 0; k < n.parents.size(); ++k) {
          accumulate(n.parents[k], n.coeffs[k] * g);
        }
        break;
      case Op::kHadamard:
        accumulate(n.parents[0], g.cwiseProduct(n.aux));
        break;
      case Op::kSquare:
        accumulate(n.parents[0], 2.0 * g.cwiseProduct(val(n.parents[0])));
        break;
      case Op::kSum: {
        const Mat& in = val(n.parents[0]);
        accumulate(n.parents[0], Mat::Constant(in.rows(), in.cols(), g(0, 0)));
        break;
      }
      case Op::kConcat: {
        Eigen::Index at = 0;
        for (int parent : n.parents) {
          const Mat& m = val(parent);
          accumulate(parent, g.block(at, 0, m.rows(), 1));
          at += m.rows();
        }
        break;
      }
      case Op::kW2Term: {
        const double s = 2.0 * g(0, 0) / static_cast<double>(n.parents.size());
        for (std::size_t i = 0; i < n.parents.size(); ++i) {
          const Mat& p = val(n.parents[i]);
          accumulate(n.parents[i],
                     s * (p.col(0) - n.aux.row(static_cast<Eigen::Index>(i)).transpose()));
        }
        break;
      }
      case Op::kLeaf:
        break;
    }
  }
}

void Graph::zero_grad() {
  for (Node& n : nodes_) {
    n.grad.setZero();
    n.touched = false;
  }
}

const Mat& Graph::value(Value v) const { return val(check(v)); }

const Mat& Graph::grad(Value v) const { return nodes_[static_cast<std::size_t>(check(v))].grad; }

double grad_check(const std::function<double(const Eigen::VectorXd&)>& f,
                  const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& analytic_grad,
                  const Eigen::VectorXd& theta, double h) {
  if (h <= 0.0) throw NumericError("grad_check needs a positive step");
  if (!std::isfinite(f(theta))) throw NumericError("grad_check: f(theta) is not finite");
  const Eigen::VectorXd analytic = analytic_grad(theta);
  double worst = 0.0;
  Eigen::VectorXd probe = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    probe(i) = theta(i) + h;
    const double up = f(probe);
    probe(i) = theta(i) - h;
    const double down = f(probe);
    probe(i) = theta(i);
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("grad_check: non-finite loss at probe coordinate " + std::to_string(i));
    }
    const double central = (up - down) / (2.0 * h);
    const double err = std::abs(analytic(i) - central) / std::max(1.0, std::abs(analytic(i)));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace w2snn::ad
