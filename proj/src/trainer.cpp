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

#include "w2snn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "w2snn/errors.hpp"
#include "w2snn/parallel.hpp"

namespace w2snn::train {

void TrainConfig::validate() const {
  if (learning_rate < 0.0) throw ConfigError("train: learning_rate must be >= 0");
  if (epoch_update < 1) throw ConfigError("train: epoch_update must be >= 1");
  if (epoch_max < 0) throw ConfigError("train: epoch_max must be >= 0");
  if (n_batch < 1) throw ConfigError("train: n_batch must be >= 1");
  if (delta <= 0.0) throw ConfigError("train: delta must be > 0");
  if (n0 < 1) throw ConfigError("train: N0 must be >= 1");
  snn.validate();
}

AdamState make_adam_state(const snn::SNNParams& params) {
  AdamState state;
  state.m = snn::zero_like(params);
  state.v = snn::zero_like(params);
  return state;
}

namespace {

void check_finite(const Eigen::MatrixXd& g, int layer, const char* tensor) {
  if (!g.allFinite()) {
    throw NumericError("non-finite gradient in layer " + std::to_string(layer) + " tensor " +
                       tensor);
  }
}

void adam_update(Eigen::MatrixXd& p, const Eigen::MatrixXd& g, Eigen::MatrixXd& m,
                 Eigen::MatrixXd& v, double lr, double beta1, double beta2, double eps,
                 double bc1, double bc2) {
  m = beta1 * m + (1.0 - beta1) * g;
  v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
  p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

}  // namespace

void adam_step(snn::SNNParams& params, const std::vector<snn::LayerTensors>& grads,
               AdamState& state, double lr, double beta1, double beta2, double eps) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    snn::LayerTensors& layer = params.layers[i];
    const snn::LayerTensors& g = grads[i];
    const int li = static_cast<int>(i);
    check_finite(g.a, li, "a");
    check_finite(g.sigma, li, "sigma");
    check_finite(g.b, li, "b");
    adam_update(layer.a, g.a, state.m[i].a, state.v[i].a, lr, beta1, beta2, eps, bc1, bc2);
    adam_update(layer.sigma, g.sigma, state.m[i].sigma, state.v[i].sigma, lr, beta1, beta2, eps,
                bc1, bc2);
    adam_update(layer.b, g.b, state.m[i].b, state.v[i].b, lr, beta1, beta2, eps, bc1, bc2);
    if (layer.skip.size() > 0) {
      check_finite(g.skip, li, "skip");
      adam_update(layer.skip, g.skip, state.m[i].skip, state.v[i].skip, lr, beta1, beta2, eps,
                  bc1, bc2);
    }
    layer.sigma = layer.sigma.cwiseMax(snn::kSigmaFloor);
  }
}

void clip_global_norm(std::vector<snn::LayerTensors>& grads, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (const snn::LayerTensors& g : grads) {
    sq += g.a.squaredNorm() + g.sigma.squaredNorm() + g.b.squaredNorm() + g.skip.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double s = max_norm / norm;
  for (snn::LayerTensors& g : grads) {
    g.a *= s;
    g.sigma *= s;
    g.b *= s;
    if (g.skip.size() > 0) g.skip *= s;
  }
}

std::pair<snn::SNNParams, TrainHistory> train(const locality::Dataset& data,
                                              const TrainConfig& config) {
  config.validate();
  if (data.xs.rows() != data.ys.rows() || data.xs.rows() < 1) {
    throw DimensionError("train: dataset input/output row counts must match and be positive");
  }
  if (static_cast<int>(data.xs.cols()) != config.snn.input_dim ||
      static_cast<int>(data.ys.cols()) != config.snn.output_dim) {
    throw DimensionError("train: dataset dims do not match snn config (inputs " +
                         std::to_string(data.xs.cols()) + " vs " +
                         std::to_string(config.snn.input_dim) + ", outputs " +
                         std::to_string(data.ys.cols()) + " vs " +
                         std::to_string(config.snn.output_dim) + ")");
  }

  const locality::NeighborhoodIndex index = locality::build_index(data.xs, config.delta);
  const std::vector<int> elig = locality::eligible(index, config.n0);
  if (elig.empty()) {
    throw ConfigError(
        "no eligible reference points: every neighborhood has fewer than N0 samples; "
        "increase delta or decrease N0");
  }

  RngStream init_rng(derive_seed(config.seed, kTagInit));
  snn::SNNParams params = snn::init(config.snn, init_rng);
  AdamState adam = make_adam_state(params);
  TrainHistory history;
  history.epochs.reserve(static_cast<std::size_t>(config.epoch_max));

  const Eigen::Index n_rows = data.xs.rows();
  const Eigen::Index out_dim = data.ys.cols();
  locality::MinibatchSelection sel;
  std::vector<int> union_rows;
  int minibatch_id = -1;

  for (int epoch = 0; epoch < config.epoch_max; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();

    if (epoch % config.epoch_update == 0) {
      ++minibatch_id;
      RngStream batch_rng(
          derive_seed(config.seed, kTagMinibatch, static_cast<std::uint64_t>(minibatch_id)));
      sel = locality::select_minibatch(elig, config.n_batch, batch_rng);
      sel.n0 = config.n0;
      sel.epoch_update = config.epoch_update;
      union_rows.clear();
      for (int x : sel.x0) {
        const auto& nb = index.neighbors[static_cast<std::size_t>(x)];
        union_rows.insert(union_rows.end(), nb.begin(), nb.end());
      }
      std::sort(union_rows.begin(), union_rows.end());
      union_rows.erase(std::unique(union_rows.begin(), union_rows.end()), union_rows.end());
    }

    // Fresh realizations for every selected input, one substream per
    // (epoch, row) so the backward pass can replay them exactly.
    Eigen::MatrixXd preds = Eigen::MatrixXd::Zero(n_rows, out_dim);
    parallel_chunks(union_rows.size(), 64, [&](std::size_t, std::size_t begin, std::size_t end) {
      for (std::size_t u = begin; u < end; ++u) {
        const int row = union_rows[u];
        RngStream row_rng(derive_seed(config.seed, kTagRealize, static_cast<std::uint64_t>(epoch),
                                      static_cast<std::uint64_t>(row)));
        const snn::WeightRealization real = snn::sample_realization(params, row_rng);
        preds.row(row) = snn::forward(params, real, data.xs.row(row).transpose()).transpose();
      }
    });

    const locality::LocalLoss loss = locality::local_w2_terms(data.ys, preds, sel, index);
    if (!std::isfinite(loss.loss)) {
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
    }

    Eigen::MatrixXd row_grads = Eigen::MatrixXd::Zero(n_rows, out_dim);
    locality::add_pred_grads(data.ys, preds, loss, 1.0, row_grads);

    // Backward per input: replay the forward on a tape and seed the output
    // gradient via sum(out .* g), which backpropagates exactly g.
    const std::size_t chunk = 32;
    const std::size_t tasks = num_chunks(union_rows.size(), chunk);
    std::vector<std::vector<snn::LayerTensors>> partials(tasks);
    parallel_chunks(union_rows.size(), chunk,
                    [&](std::size_t task, std::size_t begin, std::size_t end) {
                      partials[task] = snn::zero_like(params);
                      for (std::size_t u = begin; u < end; ++u) {
                        const int row = union_rows[u];
                        RngStream row_rng(derive_seed(config.seed, kTagRealize,
                                                      static_cast<std::uint64_t>(epoch),
                                                      static_cast<std::uint64_t>(row)));
                        const snn::WeightRealization real =
                            snn::sample_realization(params, row_rng);
                        ad::Graph g(64);
                        snn::TapedNet net = snn::make_taped_net(g, params, real);
                        ad::Value out = snn::forward_taped(g, params.config, net,
                                                           data.xs.row(row).transpose());
                        ad::Value seeded =
                            g.sum(g.hadamard(out, row_grads.row(row).transpose()));
                        g.backward(seeded);
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

    clip_global_norm(grads, config.grad_clip);
    adam_step(params, grads, adam, config.learning_rate, config.beta1, config.beta2,
              config.adam_eps);

    const auto t1 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss.loss;
    rec.minibatch_id = minibatch_id;
    rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    history.epochs.push_back(rec);
  }

  return {std::move(params), std::move(history)};
}

std::vector<ot::EmpiricalMeasure> evaluate(const snn::SNNParams& params,
                                           const Eigen::MatrixXd& test_inputs, int k,
                                           std::uint64_t seed) {
  if (k < 1) throw ConfigError("evaluate: ensemble size must be >= 1");
  std::vector<ot::EmpiricalMeasure> out(static_cast<std::size_t>(test_inputs.rows()));
  parallel_chunks(out.size(), 8, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RngStream rng(derive_seed(seed, kTagEval, i));
      out[i] = snn::forward_ensemble(params, test_inputs.row(static_cast<Eigen::Index>(i)).transpose(),
                                     k, rng);
    }
  });
  return out;
}

}  // namespace w2snn::train
