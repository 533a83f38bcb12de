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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "testutil.hpp"
#include "w2snn/errors.hpp"
#include "w2snn/snn.hpp"

using namespace w2snn;
using snn::SNNConfig;
using snn::SNNParams;

namespace {

SNNConfig small_config() {
  SNNConfig cfg;
  cfg.input_dim = 2;
  cfg.output_dim = 3;
  cfg.hidden = {4, 4};
  cfg.activation = ad::Activation::kElu;
  cfg.mode = snn::ForwardMode::kNormal;
  return cfg;
}

}  // namespace

TEST_CASE("init: degenerate scale and seed separation") {
  SNNConfig cfg = small_config();
  cfg.init_scale = 0.0;
  RngStream rng(1);
  const SNNParams p = snn::init(cfg, rng);
  for (const auto& layer : p.layers) {
    CHECK(layer.a.norm() == 0.0);
    CHECK(layer.b.norm() == 0.0);
    CHECK((layer.sigma.array() == cfg.sigma_init).all());
  }

  cfg.init_scale = 0.01;
  RngStream r1(5), r2(6);
  const SNNParams p1 = snn::init(cfg, r1);
  const SNNParams p2 = snn::init(cfg, r2);
  CHECK((p1.layers[0].a - p2.layers[0].a).norm() > 0.0);
}

TEST_CASE("init: CLT bound on the sample mean of a-entries") {
  SNNConfig cfg;
  cfg.input_dim = 500;
  cfg.output_dim = 10;
  cfg.hidden = {200};
  RngStream rng(7);
  const SNNParams p = snn::init(cfg, rng);
  double sum = 0.0;
  long count = 0;
  for (const auto& layer : p.layers) {
    sum += layer.a.sum();
    count += layer.a.size();
  }
  REQUIRE(count >= 100000);
  const double mean = sum / static_cast<double>(count);
  CHECK(std::abs(mean) <= 3.0 * 0.01 / std::sqrt(static_cast<double>(count)));
}

TEST_CASE("resnet validation requires equal consecutive hidden widths") {
  SNNConfig cfg = small_config();
  cfg.mode = snn::ForwardMode::kResnet;
  cfg.hidden = {4, 5};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.hidden = {4, 4};
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("sample_realization: determinism and zero-variance case") {
  SNNConfig cfg = small_config();
  RngStream rng(9);
  SNNParams p = snn::init(cfg, rng);

  RngStream ra(42), rb(42);
  const snn::WeightRealization e1 = snn::sample_realization(p, ra);
  const snn::WeightRealization e2 = snn::sample_realization(p, rb);
  for (std::size_t l = 0; l < e1.eps.size(); ++l) {
    CHECK((e1.eps[l] - e2.eps[l]).norm() == 0.0);
  }

  // Zero variance (test mode: sigma set directly): realized weights equal a,
  // so the forward pass is independent of the draw.
  for (auto& layer : p.layers) layer.sigma.setZero();
  RngStream rc(1), rd(2);
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(2);
  const Eigen::VectorXd y1 = snn::forward(p, x, rc);
  const Eigen::VectorXd y2 = snn::forward(p, x, rd);
  CHECK((y1 - y2).norm() == 0.0);
}

TEST_CASE("sample_realization: Monte Carlo variance of realized weights") {
  SNNConfig cfg;
  cfg.input_dim = 1;
  cfg.output_dim = 1;
  cfg.hidden = {};
  RngStream rng(11);
  SNNParams p = snn::init(cfg, rng);
  p.layers[0].a(0, 0) = 0.3;
  p.layers[0].sigma(0, 0) = 0.5;
  const int n = 100000;
  RngStream draws(13);
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const snn::WeightRealization real = snn::sample_realization(p, draws);
    const double w = p.layers[0].a(0, 0) + p.layers[0].sigma(0, 0) * real.eps[0](0, 0);
    sum += w;
    sumsq += w * w;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(var == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("forward: zero network, frozen determinism, hand-worked pass") {
  SNNConfig cfg = small_config();
  RngStream rng(15);
  SNNParams p = snn::init(cfg, rng);
  for (auto& layer : p.layers) {
    layer.a.setZero();
    layer.sigma.setZero();
    layer.b.setZero();
  }
  RngStream fwd_rng(3);
  CHECK(snn::forward(p, Eigen::Vector2d(0.7, -0.3), fwd_rng).norm() == 0.0);

  RngStream r2(99);
  const snn::WeightRealization real = snn::sample_realization(p, r2);
  const Eigen::VectorXd xa = Eigen::Vector2d(0.2, 0.4);
  const Eigen::VectorXd o1 = snn::forward(p, real, xa);
  const Eigen::VectorXd o2 = snn::forward(p, real, xa);
  CHECK((o1 - o2).norm() == 0.0);

  // 1-hidden-layer ReLU net with hand-set parameters and noise draws.
  SNNConfig hand;
  hand.input_dim = 2;
  hand.output_dim = 1;
  hand.hidden = {2};
  hand.activation = ad::Activation::kRelu;
  RngStream hr(1);
  SNNParams hp = snn::init(hand, hr);
  hp.layers[0].a << 1, 0, 0, -1;
  hp.layers[0].sigma = snn::Mat::Constant(2, 2, 0.5);
  hp.layers[0].b << 0.5, -0.5;
  hp.layers[1].a << 1, 1;
  hp.layers[1].sigma = snn::Mat::Constant(1, 2, 0.5);
  hp.layers[1].b << 1;
  snn::WeightRealization hreal;
  hreal.eps.push_back((snn::Mat(2, 2) << 2, 0, 0, 2).finished());
  hreal.eps.push_back((snn::Mat(1, 2) << 0, 2).finished());
  // W1 = [[2,0],[0,0]], pre = (2.5, -0.5), relu = (2.5, 0);
  // W2 = [[1,2]], out = 2.5 + 0 + 1 = 3.5.
  const Eigen::VectorXd out = snn::forward(hp, hreal, Eigen::Vector2d(1, -1));
  CHECK(out(0) == doctest::Approx(3.5));
}

TEST_CASE("forward_ensemble: shape, zero-sigma rows, K=1 stream match") {
  SNNConfig cfg = small_config();
  RngStream rng(21);
  SNNParams p = snn::init(cfg, rng);
  for (auto& layer : p.layers) layer.sigma.setZero();
  RngStream er(5);
  const ot::EmpiricalMeasure ens = snn::forward_ensemble(p, Eigen::Vector2d(1, 2), 7, er);
  CHECK(ens.rows() == 7);
  CHECK(ens.cols() == 3);
  for (int r = 1; r < 7; ++r) CHECK((ens.row(r) - ens.row(0)).norm() == 0.0);

  RngStream ra(8), rb(8);
  SNNParams q = snn::init(cfg, rng);
  const ot::EmpiricalMeasure one = snn::forward_ensemble(q, Eigen::Vector2d(1, 2), 1, ra);
  const Eigen::VectorXd single = snn::forward(q, Eigen::Vector2d(1, 2), rb);
  CHECK((one.row(0).transpose() - single).norm() == 0.0);
}

TEST_CASE("forward_ensemble: affine-net ensemble mean approaches the mean-weight forward") {
  SNNConfig cfg;
  cfg.input_dim = 2;
  cfg.output_dim = 2;
  cfg.hidden = {};
  cfg.init_scale = 0.3;
  cfg.sigma_init = 0.2;
  RngStream rng(31);
  const SNNParams p = snn::init(cfg, rng);
  const Eigen::VectorXd x = Eigen::Vector2d(0.8, -1.1);
  const int k = 20000;
  RngStream er(33);
  const ot::EmpiricalMeasure ens = snn::forward_ensemble(p, x, k, er);
  const Eigen::VectorXd expect = p.layers[0].a * x + p.layers[0].b.col(0);
  for (int j = 0; j < 2; ++j) {
    const double mean = ens.col(j).mean();
    const double sd = std::sqrt((ens.col(j).array() - mean).square().sum() / (k - 1));
    CHECK(std::abs(mean - expect(j)) <= 3.0 * sd / std::sqrt(static_cast<double>(k)));
  }
}

TEST_CASE("distributional sanity: affine SNN output is Gaussian with known moments") {
  SNNConfig cfg;
  cfg.input_dim = 2;
  cfg.output_dim = 2;
  cfg.hidden = {};
  cfg.init_scale = 0.4;
  cfg.sigma_init = 0.3;
  RngStream rng(37);
  SNNParams p = snn::init(cfg, rng);
  p.layers[0].sigma << 0.3, 0.1, 0.05, 0.5;
  const Eigen::VectorXd x = Eigen::Vector2d(1.5, -0.5);
  const int k = 100000;
  RngStream er(39);
  const ot::EmpiricalMeasure ens = snn::forward_ensemble(p, x, k, er);
  const Eigen::VectorXd mean_expect = p.layers[0].a * x + p.layers[0].b.col(0);
  for (int j = 0; j < 2; ++j) {
    double var_expect = 0.0;
    for (int i = 0; i < 2; ++i) {
      var_expect += p.layers[0].sigma(j, i) * p.layers[0].sigma(j, i) * x(i) * x(i);
    }
    const double mean = ens.col(j).mean();
    const double var = (ens.col(j).array() - mean).square().sum() / (k - 1);
    CHECK(std::abs(mean - mean_expect(j)) <= 4.0 * std::sqrt(var_expect / k));
    // Var(sample var) ~ 2 var^2 / k for Gaussians.
    CHECK(std::abs(var - var_expect) <= 4.0 * var_expect * std::sqrt(2.0 / k));
  }
}

TEST_CASE("perturb: identity, exact flattened distance, bias pass-through") {
  SNNConfig cfg = small_config();
  cfg.sigma_init = 0.5;  // keep the floor out of play
  RngStream rng(41);
  const SNNParams p = snn::init(cfg, rng);

  Eigen::VectorXd dir = Eigen::VectorXd::Zero(p.asb_size());
  RngStream dr(43);
  for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = dr.normal();
  dir.normalize();

  const SNNParams same = snn::perturb(p, dir, 0.0);
  CHECK((same.flatten_asb() - p.flatten_asb()).norm() == 0.0);

  const double eps = 0.125;
  const SNNParams moved = snn::perturb(p, dir, eps);
  // sigma_init is far above the floor, so no clamping happens here.
  CHECK((moved.flatten_asb() - p.flatten_asb()).norm() == doctest::Approx(eps).epsilon(1e-12));

  // Perturbing only the output-layer bias shifts every sample by exactly
  // eps * direction_b.
  Eigen::VectorXd bias_dir = Eigen::VectorXd::Zero(p.asb_size());
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    at += 2 * p.layers[l].a.size();
    if (l + 1 == p.layers.size()) {
      for (Eigen::Index i = 0; i < p.layers[l].b.size(); ++i) bias_dir(at + i) = 1.0;
    }
    at += p.layers[l].b.size();
  }
  bias_dir.normalize();
  const SNNParams shifted = snn::perturb(p, bias_dir, eps);
  RngStream s1(77), s2(77);
  const snn::WeightRealization real = snn::sample_realization(p, s1);
  const snn::WeightRealization real2 = snn::sample_realization(shifted, s2);
  const Eigen::VectorXd x = Eigen::Vector2d(0.3, 0.9);
  const Eigen::VectorXd delta = snn::forward(shifted, real2, x) - snn::forward(p, real, x);
  const double per_entry = eps / std::sqrt(3.0);
  for (int j = 0; j < 3; ++j) CHECK(delta(j) == doctest::Approx(per_entry).epsilon(1e-12));
}

TEST_CASE("reparameterization: taped forward matches plain forward and finite differences") {
  for (auto mode : {snn::ForwardMode::kNormal, snn::ForwardMode::kResnet}) {
    SNNConfig cfg = small_config();
    cfg.mode = mode;
    cfg.init_scale = 0.4;
    cfg.sigma_init = 0.2;
    RngStream rng(47);
    SNNParams p = snn::init(cfg, rng);
    RngStream er(49);
    const snn::WeightRealization real = snn::sample_realization(p, er);
    const Eigen::VectorXd x = Eigen::Vector2d(0.6, -0.2);

    ad::Graph g;
    snn::TapedNet net = snn::make_taped_net(g, p, real);
    ad::Value out = snn::forward_taped(g, cfg, net, x);
    const Eigen::VectorXd plain = snn::forward(p, real, x);
    CHECK((g.value(out).col(0) - plain).norm() <= 1e-14);

    // d(sum of outputs)/d(theta) against central differences; ELU keeps the
    // map C1 so any point works.
    auto loss_at = [&](const Eigen::VectorXd& theta) {
      SNNParams q = p;
      q.set_from_asb(theta);
      return snn::forward(q, real, x).sum();
    };
    auto grad_at = [&](const Eigen::VectorXd& theta) {
      SNNParams q = p;
      q.set_from_asb(theta);
      ad::Graph g2;
      snn::TapedNet net2 = snn::make_taped_net(g2, q, real);
      ad::Value out2 = snn::forward_taped(g2, cfg, net2, x);
      g2.backward(g2.sum(out2));
      Eigen::VectorXd grad(q.asb_size());
      Eigen::Index pos = 0;
      for (std::size_t l = 0; l < net2.leaves.layers.size(); ++l) {
        const ad::Mat& ga = g2.grad(net2.leaves.layers[l].a);
        const ad::Mat& gs = g2.grad(net2.leaves.layers[l].sigma);
        const ad::Mat& gb = g2.grad(net2.leaves.layers[l].b);
        for (Eigen::Index r = 0; r < ga.rows(); ++r) {
          for (Eigen::Index c = 0; c < ga.cols(); ++c) grad(pos++) = ga(r, c);
        }
        for (Eigen::Index r = 0; r < gs.rows(); ++r) {
          for (Eigen::Index c = 0; c < gs.cols(); ++c) grad(pos++) = gs(r, c);
        }
        for (Eigen::Index r = 0; r < gb.rows(); ++r) grad(pos++) = gb(r, 0);
      }
      return grad;
    };
    CHECK(ad::grad_check(loss_at, grad_at, p.flatten_asb(), 1e-5) <= 1e-7);
  }
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  SNNConfig cfg = small_config();
  cfg.mode = snn::ForwardMode::kResnet;
  cfg.hidden = {4, 4};
  RngStream rng(53);
  SNNParams p = snn::init(cfg, rng);
  // Exercise awkward values.
  p.layers[0].a(0, 0) = 0x1.fffffffffffffp-3;
  p.layers[0].b(1, 0) = -1e-300;
  p.layers[1].a(2, 1) = 1.0 / 3.0;

  const std::string path =
      (std::filesystem::temp_directory_path() / "w2snn_ckpt_test.txt").string();
  snn::save_checkpoint(path, p);
  const SNNParams q = snn::load_checkpoint(path);
  REQUIRE(q.layers.size() == p.layers.size());
  CHECK(q.config.input_dim == p.config.input_dim);
  CHECK(q.config.hidden == p.config.hidden);
  CHECK(snn::mode_name(q.config.mode) == snn::mode_name(p.config.mode));
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    CHECK(std::memcmp(q.layers[l].a.data(), p.layers[l].a.data(),
                      sizeof(double) * static_cast<std::size_t>(p.layers[l].a.size())) == 0);
    CHECK(std::memcmp(q.layers[l].sigma.data(), p.layers[l].sigma.data(),
                      sizeof(double) * static_cast<std::size_t>(p.layers[l].sigma.size())) == 0);
    CHECK(std::memcmp(q.layers[l].b.data(), p.layers[l].b.data(),
                      sizeof(double) * static_cast<std::size_t>(p.layers[l].b.size())) == 0);
    if (p.layers[l].skip.size() > 0) {
      CHECK(std::memcmp(q.layers[l].skip.data(), p.layers[l].skip.data(),
                        sizeof(double) * static_cast<std::size_t>(p.layers[l].skip.size())) == 0);
    }
  }
  std::filesystem::remove(path);
}
