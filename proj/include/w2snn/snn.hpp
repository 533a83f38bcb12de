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
#include <string>
#include <vector>

#include "w2snn/autodiff.hpp"
#include "w2snn/ot.hpp"
#include "w2snn/rng.hpp"

namespace w2snn::snn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Sigma entries are clamped here after every optimizer step and perturbation.
constexpr double kSigmaFloor = 1e-6;

enum class ForwardMode { kNormal, kResnet };

// Network shape and initialization law. Hidden may be empty (pure affine
// net); resnet mode requires equal consecutive hidden widths.
struct SNNConfig {
  int input_dim = 2;
  int output_dim = 1;
  std::vector<int> hidden;
  ad::Activation activation = ad::Activation::kElu;
  ForwardMode mode = ForwardMode::kNormal;
  double init_scale = 0.01;
  double sigma_init = 0.01;

  int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
  int layer_in(int i) const { return i == 0 ? input_dim : hidden[static_cast<std::size_t>(i - 1)]; }
  int layer_out(int i) const {
    return i == static_cast<int>(hidden.size()) ? output_dim : hidden[static_cast<std::size_t>(i)];
  }
  bool has_skip(int i) const {
    return mode == ForwardMode::kResnet && i < static_cast<int>(hidden.size());
  }
  void validate() const;
};

// Per-layer tensors; used both for parameters and for parameter gradients.
// skip is 0x0 on layers without a skip connection.
struct LayerTensors {
  Mat a;
  Mat sigma;
  Mat b;
  Mat skip;
};

struct SNNParams {
  SNNConfig config;
  std::vector<LayerTensors> layers;

  // Flattened (a, sigma, b) coordinates, layer by layer, row-major; skip
  // weights are excluded (the perturbation space of the robustness study).
  Eigen::Index asb_size() const;
  Eigen::VectorXd flatten_asb() const;
  void set_from_asb(const Eigen::VectorXd& theta);
};

// One draw of the per-weight standard normal noise; realized weights are
// a + sigma .* eps.
struct WeightRealization {
  std::vector<Mat> eps;
};

SNNParams init(const SNNConfig& config, RngStream& rng);
WeightRealization sample_realization(const SNNParams& params, RngStream& rng);

// Frozen-mode forward: a pure function of (params, realization, x).
Vec forward(const SNNParams& params, const WeightRealization& real, const Vec& x);
// Fresh-mode forward: draws a new realization from rng, then evaluates.
Vec forward(const SNNParams& params, const Vec& x, RngStream& rng);

// K independent fresh-mode forwards at the same x; rows are samples.
ot::EmpiricalMeasure forward_ensemble(const SNNParams& params, const Vec& x, int k,
                                      RngStream& rng);

// params + eps * direction over the flattened (a, sigma, b) space, sigma
// re-floored. direction.size() must equal asb_size().
SNNParams perturb(const SNNParams& params, const Eigen::VectorXd& direction, double eps);

// Tape handles for one graph sharing the parameter storage (external leaves:
// params must outlive the graph and stay unmodified while it is in use).
struct TapedParams {
  struct Layer {
    ad::Value a, sigma, b, skip;
  };
  std::vector<Layer> layers;
};

TapedParams make_leaves(ad::Graph& g, const SNNParams& params);

// Differentiable frozen-mode forward. Realized weight nodes are built once
// and may be reused across calls with the same TapedParams/realization.
struct TapedNet {
  TapedParams leaves;
  std::vector<ad::Value> weights;    // realized per-layer weight nodes
  std::vector<ad::Value> skip_zero;  // zero bias used by skip matvecs
};

TapedNet make_taped_net(ad::Graph& g, const SNNParams& params, const WeightRealization& real);
ad::Value forward_taped(ad::Graph& g, const SNNConfig& config, const TapedNet& net, ad::Value x);
ad::Value forward_taped(ad::Graph& g, const SNNConfig& config, const TapedNet& net, const Vec& x);

// Adds the leaf gradients accumulated in g into grads (same layer shapes).
void add_param_grads(const ad::Graph& g, const TapedParams& leaves, std::vector<LayerTensors>& grads);

std::vector<LayerTensors> zero_like(const SNNParams& params);

// Self-describing text checkpoint; round-trips bit-exactly.
void save_checkpoint(const std::string& path, const SNNParams& params);
SNNParams load_checkpoint(const std::string& path);

std::string activation_name(ad::Activation a);
ad::Activation activation_from_name(const std::string& name);
std::string mode_name(ForwardMode m);
ForwardMode mode_from_name(const std::string& name);

}  // namespace w2snn::snn
