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
#include <utility>
#include <vector>

#include "w2snn/locality.hpp"
#include "w2snn/snn.hpp"

namespace w2snn::train {

struct TrainConfig {
  double learning_rate = 0.005;
  int epoch_max = 1000;
  int epoch_update = 20;  // minibatch refresh period
  int n_batch = 128;
  double delta = 0.25;
  int n0 = 4;
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 0.0;  // global-norm clip; 0 disables
  snn::SNNConfig snn;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  int minibatch_id = 0;
  double wall_ms = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::vector<snn::SNNParams> checkpoints;
};

struct AdamState {
  std::vector<snn::LayerTensors> m;
  std::vector<snn::LayerTensors> v;
  long step = 0;
};

AdamState make_adam_state(const snn::SNNParams& params);

// Standard Adam with bias correction; sigma entries are clamped to the floor
// afterwards. Throws NumericError naming the offending layer on non-finite
// gradients.
void adam_step(snn::SNNParams& params, const std::vector<snn::LayerTensors>& grads,
               AdamState& state, double lr, double beta1, double beta2, double eps);

// Scales grads in place so the global l2 norm is at most max_norm (no-op if
// max_norm <= 0 or the norm is already within bounds).
void clip_global_norm(std::vector<snn::LayerTensors>& grads, double max_norm);

// Minibatch local squared W2 training: one gradient step per epoch on the
// current minibatch, fresh weight realizations every epoch, minibatch
// refreshed every epoch_update epochs.
std::pair<snn::SNNParams, TrainHistory> train(const locality::Dataset& data,
                                              const TrainConfig& config);

// K-sample prediction ensembles at each test input, independent substreams
// per input.
std::vector<ot::EmpiricalMeasure> evaluate(const snn::SNNParams& params,
                                           const Eigen::MatrixXd& test_inputs, int k,
                                           std::uint64_t seed);

}  // namespace w2snn::train
