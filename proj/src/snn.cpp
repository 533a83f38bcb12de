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

#include "w2snn/snn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "w2snn/errors.hpp"
#include "w2snn/io_util.hpp"

namespace w2snn::snn {

void SNNConfig::validate() const {
  if (input_dim < 1 || output_dim < 1) {
    throw ConfigError("snn: input_dim and output_dim must be >= 1");
  }
  for (int h : hidden) {
    if (h < 1) throw ConfigError("snn: hidden widths must be >= 1");
  }
  if (mode == ForwardMode::kResnet) {
    for (std::size_t i = 1; i < hidden.size(); ++i) {
      if (hidden[i] != hidden[i - 1]) {
        throw ConfigError("snn: resnet mode requires equal consecutive hidden widths");
      }
    }
  }
  if (sigma_init <= 0.0) throw ConfigError("snn: sigma_init must be > 0");
  if (init_scale < 0.0) throw ConfigError("snn: init_scale must be >= 0");
}

SNNParams init(const SNNConfig& config, RngStream& rng) {
  config.validate();
  SNNParams params;
  params.config = config;
  const int layer_count = config.layer_count();
  params.layers.resize(static_cast<std::size_t>(layer_count));
  for (int i = 0; i < layer_count; ++i) {
    const int rows = config.layer_out(i);
    const int cols = config.layer_in(i);
    LayerTensors& layer = params.layers[static_cast<std::size_t>(i)];
    layer.a.resize(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) layer.a(r, c) = rng.normal(0.0, config.init_scale);
    }
    layer.sigma = Mat::Constant(rows, cols, config.sigma_init);
    layer.b.resize(rows, 1);
    for (int r = 0; r < rows; ++r) layer.b(r, 0) = rng.normal(0.0, config.init_scale);
    if (config.has_skip(i)) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
      layer.skip.resize(rows, cols);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) layer.skip(r, c) = rng.uniform(-bound, bound);
      }
    }
  }
  return params;
}

WeightRealization sample_realization(const SNNParams& params, RngStream& rng) {
  WeightRealization real;
  real.eps.reserve(params.layers.size());
  for (const LayerTensors& layer : params.layers) {
    Mat e(layer.a.rows(), layer.a.cols());
    for (Eigen::Index r = 0; r < e.rows(); ++r) {
      for (Eigen::Index c = 0; c < e.cols(); ++c) e(r, c) = rng.normal();
    }
    real.eps.push_back(std::move(e));
  }
  return real;
}

namespace {

double apply_act(double t, ad::Activation kind) {
  if (kind == ad::Activation::kRelu) return t > 0.0 ? t : 0.0;
  return t >= 0.0 ? t : std::expm1(t);
}

}  // namespace

Vec forward(const SNNParams& params, const WeightRealization& real, const Vec& x) {
  const SNNConfig& cfg = params.config;
  if (x.size() != cfg.input_dim) {
    throw DimensionError("snn forward: input size " + std::to_string(x.size()) +
                         " != input_dim " + std::to_string(cfg.input_dim));
  }
  if (real.eps.size() != params.layers.size()) {
    throw DimensionError("snn forward: realization layer count mismatch");
  }
  Vec h = x;
  for (int i = 0; i < cfg.layer_count(); ++i) {
    const LayerTensors& layer = params.layers[static_cast<std::size_t>(i)];
    const Mat& eps = real.eps[static_cast<std::size_t>(i)];
    Vec pre = layer.b.col(0);
    pre.noalias() += (layer.a + layer.sigma.cwiseProduct(eps)) * h;
    if (cfg.has_skip(i)) pre.noalias() += layer.skip * h;
    if (i < static_cast<int>(cfg.hidden.size())) {
      for (Eigen::Index r = 0; r < pre.size(); ++r) pre(r) = apply_act(pre(r), cfg.activation);
    }
    h = std::move(pre);
  }
  return h;
}

Vec forward(const SNNParams& params, const Vec& x, RngStream& rng) {
  const WeightRealization real = sample_realization(params, rng);
  return forward(params, real, x);
}

ot::EmpiricalMeasure forward_ensemble(const SNNParams& params, const Vec& x, int k,
                                      RngStream& rng) {
  if (k < 1) throw ConfigError("forward_ensemble: sample count must be >= 1");
  ot::EmpiricalMeasure out(k, params.config.output_dim);
  for (int s = 0; s < k; ++s) {
    out.row(s) = forward(params, x, rng).transpose();
  }
  return out;
}

Eigen::Index SNNParams::asb_size() const {
  Eigen::Index n = 0;
  for (const LayerTensors& layer : layers) n += 2 * layer.a.size() + layer.b.size();
  return n;
}

Eigen::VectorXd SNNParams::flatten_asb() const {
  Eigen::VectorXd theta(asb_size());
  Eigen::Index at = 0;
  for (const LayerTensors& layer : layers) {
    for (Eigen::Index r = 0; r < layer.a.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.a.cols(); ++c) theta(at++) = layer.a(r, c);
    }
    for (Eigen::Index r = 0; r < layer.sigma.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.sigma.cols(); ++c) theta(at++) = layer.sigma(r, c);
    }
    for (Eigen::Index r = 0; r < layer.b.rows(); ++r) theta(at++) = layer.b(r, 0);
  }
  return theta;
}

void SNNParams::set_from_asb(const Eigen::VectorXd& theta) {
  if (theta.size() != asb_size()) {
    throw DimensionError("set_from_asb: vector size " + std::to_string(theta.size()) +
                         " != parameter count " + std::to_string(asb_size()));
  }
  Eigen::Index at = 0;
  for (LayerTensors& layer : layers) {
    for (Eigen::Index r = 0; r < layer.a.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.a.cols(); ++c) layer.a(r, c) = theta(at++);
    }
    for (Eigen::Index r = 0; r < layer.sigma.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.sigma.cols(); ++c) layer.sigma(r, c) = theta(at++);
    }
    for (Eigen::Index r = 0; r < layer.b.rows(); ++r) layer.b(r, 0) = theta(at++);
  }
}

SNNParams perturb(const SNNParams& params, const Eigen::VectorXd& direction, double eps) {
  if (eps < 0.0) throw ConfigError("perturb: eps must be >= 0");
  SNNParams out = params;
  Eigen::VectorXd theta = out.flatten_asb();
  if (direction.size() != theta.size()) {
    throw DimensionError("perturb: direction size " + std::to_string(direction.size()) +
                         " != parameter count " + std::to_string(theta.size()));
  }
  theta += eps * direction;
  out.set_from_asb(theta);
  for (LayerTensors& layer : out.layers) {
    layer.sigma = layer.sigma.cwiseMax(kSigmaFloor);
  }
  return out;
}

TapedParams make_leaves(ad::Graph& g, const SNNParams& params) {
  TapedParams tp;
  tp.layers.reserve(params.layers.size());
  for (const LayerTensors& layer : params.layers) {
    TapedParams::Layer tl;
    tl.a = g.leaf(&layer.a);
    tl.sigma = g.leaf(&layer.sigma);
    tl.b = g.leaf(&layer.b);
    if (layer.skip.size() > 0) tl.skip = g.leaf(&layer.skip);
    tp.layers.push_back(tl);
  }
  return tp;
}

TapedNet make_taped_net(ad::Graph& g, const SNNParams& params, const WeightRealization& real) {
  TapedNet net;
  net.leaves = make_leaves(g, params);
  net.weights.reserve(params.layers.size());
  net.skip_zero.resize(params.layers.size());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    net.weights.push_back(
        g.add(net.leaves.layers[i].a, g.hadamard(net.leaves.layers[i].sigma, real.eps[i])));
    if (params.layers[i].skip.size() > 0) {
      net.skip_zero[i] = g.leaf(Mat::Zero(params.layers[i].skip.rows(), 1));
    }
  }
  return net;
}

ad::Value forward_taped(ad::Graph& g, const SNNConfig& config, const TapedNet& net, ad::Value x) {
  ad::Value h = x;
  for (int i = 0; i < config.layer_count(); ++i) {
    const auto& layer = net.leaves.layers[static_cast<std::size_t>(i)];
    ad::Value pre = g.affine(net.weights[static_cast<std::size_t>(i)], h, layer.b);
    if (config.has_skip(i)) {
      pre = g.add(pre, g.affine(layer.skip, h, net.skip_zero[static_cast<std::size_t>(i)]));
    }
    h = i < static_cast<int>(config.hidden.size()) ? g.activation(pre, config.activation) : pre;
  }
  return h;
}

ad::Value forward_taped(ad::Graph& g, const SNNConfig& config, const TapedNet& net, const Vec& x) {
  return forward_taped(g, config, net, g.leaf(Mat(x)));
}

void add_param_grads(const ad::Graph& g, const TapedParams& leaves,
                     std::vector<LayerTensors>& grads) {
  for (std::size_t i = 0; i < leaves.layers.size(); ++i) {
    grads[i].a += g.grad(leaves.layers[i].a);
    grads[i].sigma += g.grad(leaves.layers[i].sigma);
    grads[i].b += g.grad(leaves.layers[i].b);
    if (leaves.layers[i].skip.valid()) grads[i].skip += g.grad(leaves.layers[i].skip);
  }
}

std::vector<LayerTensors> zero_like(const SNNParams& params) {
  std::vector<LayerTensors> grads;
  grads.reserve(params.layers.size());
  for (const LayerTensors& layer : params.layers) {
    LayerTensors z;
    z.a = Mat::Zero(layer.a.rows(), layer.a.cols());
    z.sigma = Mat::Zero(layer.sigma.rows(), layer.sigma.cols());
    z.b = Mat::Zero(layer.b.rows(), layer.b.cols());
    if (layer.skip.size() > 0) z.skip = Mat::Zero(layer.skip.rows(), layer.skip.cols());
    grads.push_back(std::move(z));
  }
  return grads;
}

std::string activation_name(ad::Activation a) {
  return a == ad::Activation::kRelu ? "relu" : "elu";
}

ad::Activation activation_from_name(const std::string& name) {
  if (name == "relu") return ad::Activation::kRelu;
  if (name == "elu") return ad::Activation::kElu;
  throw ConfigError("unknown activation '" + name + "' (expected relu|elu)");
}

std::string mode_name(ForwardMode m) { return m == ForwardMode::kResnet ? "resnet" : "normal"; }

ForwardMode mode_from_name(const std::string& name) {
  if (name == "normal") return ForwardMode::kNormal;
  if (name == "resnet") return ForwardMode::kResnet;
  throw ConfigError("unknown forward_mode '" + name + "' (expected normal|resnet)");
}

namespace {

void write_mat(std::string& out, const char* tag, int layer, const Mat& m) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "layer %d %s %ld %ld\n", layer, tag, static_cast<long>(m.rows()),
                static_cast<long>(m.cols()));
  out += buf;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g%c", m(r, c), c + 1 == m.cols() ? '\n' : ' ');
      out += buf;
    }
  }
}

Mat read_mat(std::istream& in, const std::string& tag, int layer) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("checkpoint: truncated before " + tag);
  std::istringstream head(line);
  std::string kw, got_tag;
  int got_layer = 0;
  long rows = 0, cols = 0;
  head >> kw >> got_layer >> got_tag >> rows >> cols;
  if (kw != "layer" || got_layer != layer || got_tag != tag || rows < 1 || cols < 1) {
    throw IoError("checkpoint: expected 'layer " + std::to_string(layer) + " " + tag +
                  " <rows> <cols>', got '" + line + "'");
  }
  Mat m(rows, cols);
  for (long r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw IoError("checkpoint: truncated inside " + tag);
    std::istringstream row(line);
    for (long c = 0; c < cols; ++c) {
      if (!(row >> m(r, c))) throw IoError("checkpoint: bad numeric row in " + tag);
    }
  }
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const SNNParams& params) {
  const SNNConfig& cfg = params.config;
  std::string out = "w2snn-checkpoint v1\n";
  char buf[128];
  std::snprintf(buf, sizeof(buf), "input_dim %d\noutput_dim %d\n", cfg.input_dim, cfg.output_dim);
  out += buf;
  out += "hidden";
  for (int h : cfg.hidden) {
    std::snprintf(buf, sizeof(buf), " %d", h);
    out += buf;
  }
  out += "\nactivation " + activation_name(cfg.activation);
  out += "\nforward_mode " + mode_name(cfg.mode);
  std::snprintf(buf, sizeof(buf), "\ninit_scale %.17g\nsigma_init %.17g\n", cfg.init_scale,
                cfg.sigma_init);
  out += buf;
  for (int i = 0; i < cfg.layer_count(); ++i) {
    const LayerTensors& layer = params.layers[static_cast<std::size_t>(i)];
    write_mat(out, "a", i, layer.a);
    write_mat(out, "sigma", i, layer.sigma);
    write_mat(out, "b", i, layer.b);
    if (layer.skip.size() > 0) write_mat(out, "skip", i, layer.skip);
  }
  out += "end\n";
  io::atomic_write_file(path, out);
}

SNNParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "w2snn-checkpoint v1") {
    throw IoError("checkpoint: bad magic line in '" + path + "'");
  }
  SNNConfig cfg;
  auto expect_kv = [&](const std::string& key) {
    if (!std::getline(in, line)) throw IoError("checkpoint: truncated header");
    std::istringstream ls(line);
    std::string k;
    ls >> k;
    if (k != key) throw IoError("checkpoint: expected '" + key + "', got '" + line + "'");
    return std::string(line.substr(key.size()));
  };
  cfg.input_dim = std::stoi(expect_kv("input_dim"));
  cfg.output_dim = std::stoi(expect_kv("output_dim"));
  {
    std::istringstream hs(expect_kv("hidden"));
    int h;
    while (hs >> h) cfg.hidden.push_back(h);
  }
  {
    std::istringstream as(expect_kv("activation"));
    std::string name;
    as >> name;
    cfg.activation = activation_from_name(name);
  }
  {
    std::istringstream ms(expect_kv("forward_mode"));
    std::string name;
    ms >> name;
    cfg.mode = mode_from_name(name);
  }
  cfg.init_scale = std::stod(expect_kv("init_scale"));
  cfg.sigma_init = std::stod(expect_kv("sigma_init"));

  SNNParams params;
  params.config = cfg;
  for (int i = 0; i < cfg.layer_count(); ++i) {
    LayerTensors layer;
    layer.a = read_mat(in, "a", i);
    layer.sigma = read_mat(in, "sigma", i);
    layer.b = read_mat(in, "b", i);
    if (cfg.has_skip(i)) layer.skip = read_mat(in, "skip", i);
    params.layers.push_back(std::move(layer));
  }
  if (!std::getline(in, line) || line != "end") throw IoError("checkpoint: missing end marker");
  return params;
}

}  // namespace w2snn::snn
