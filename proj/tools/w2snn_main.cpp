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
//
// Command-line front end. Every command writes its artifacts plus a
// manifest.json; `replay <manifest>` re-runs a command from its resolved
// configuration and verifies the output hashes.
//
// Exit codes: 0 success, 2 config error, 3 numerical abort, 4 inconclusive
// study. Environment: W2SNN_OUT overrides --out, W2SNN_THREADS overrides
// --threads.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "w2snn/config.hpp"
#include "w2snn/csv_io.hpp"
#include "w2snn/errors.hpp"
#include "w2snn/io_util.hpp"
#include "w2snn/manifest.hpp"
#include "w2snn/parallel.hpp"
#include "w2snn/svg.hpp"
#include "w2snn/theory_lab.hpp"

namespace {

namespace fs = std::filesystem;
using namespace w2snn;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

struct RunContext {
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
};

io::RunManifest start_manifest(const std::string& command, const RunContext& ctx) {
  io::RunManifest m;
  m.command = command;
  m.created_utc = io::utc_timestamp();
  m.tool_version = kVersion;
  (void)ctx;
  return m;
}

void add_output(io::RunManifest& m, const std::string& out_dir, const std::string& name,
                const std::string& kind = "sha256") {
  io::RunManifest::Output o;
  o.kind = kind;
  o.hash = io::hash_output(out_dir, name, kind);
  m.outputs[name] = o;
}

void finish_manifest(io::RunManifest& m, const std::string& out_dir) {
  io::save_manifest((fs::path(out_dir) / "manifest.json").string(), m);
}

std::string history_csv(const train::TrainHistory& history) {
  std::string out = "epoch,loss,minibatch_id,wall_ms\n";
  for (const train::EpochRecord& r : history.epochs) {
    out += std::to_string(r.epoch) + "," + io::format_double(r.loss) + "," +
           std::to_string(r.minibatch_id) + "," + io::format_double(r.wall_ms) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

io::RunManifest run_gen_data(const io::KeyValues& kv, const RunContext& ctx) {
  const std::string kind = kv.get_string("data.kind", "example1");
  std::uint64_t seed = kv.get_u64("data.seed", 1);
  if (ctx.seed_override) seed = *ctx.seed_override;

  io::RunManifest m = start_manifest("gen-data", ctx);
  m.seed = seed;
  m.resolved_config["data.kind"] = kind;
  m.resolved_config["data.seed"] = std::to_string(seed);

  if (kind == "example1") {
    const experiments::Example1Config config = io::example1_from_kv(kv);
    for (const auto& [k, v] : io::to_kv(config)) m.resolved_config[k] = v;
    const experiments::Example1Data data = experiments::gen_example1(config, seed);
    io::write_dataset_csv((fs::path(ctx.out_dir) / "train.csv").string(), data.train);
    io::write_test_ensembles_csv((fs::path(ctx.out_dir) / "test.csv").string(), data.test_inputs,
                                 data.test_truth);
    add_output(m, ctx.out_dir, "train.csv");
    add_output(m, ctx.out_dir, "test.csv");
  } else if (kind == "ode") {
    const experiments::ODEConfig config = io::ode_from_kv(kv);
    for (const auto& [k, v] : io::to_kv(config)) m.resolved_config[k] = v;
    const experiments::TrajectoryEnsemble truth = experiments::gen_truth_ensemble(config, seed);
    io::write_trajectory_csv((fs::path(ctx.out_dir) / "truth.csv").string(), truth);
    add_output(m, ctx.out_dir, "truth.csv");
  } else {
    throw ConfigError("data.kind: expected example1|ode, got '" + kind + "'");
  }
  finish_manifest(m, ctx.out_dir);
  return m;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

io::RunManifest run_train(const io::KeyValues& kv, const std::string& data_dir,
                          const RunContext& ctx) {
  train::TrainConfig config = io::train_from_kv(kv);
  if (ctx.seed_override) config.seed = *ctx.seed_override;

  const std::string train_csv = (fs::path(data_dir) / "train.csv").string();
  const locality::Dataset data = io::read_dataset_csv(train_csv);
  if (static_cast<int>(data.xs.cols()) != config.snn.input_dim ||
      static_cast<int>(data.ys.cols()) != config.snn.output_dim) {
    throw ConfigError("dataset dims (" + std::to_string(data.xs.cols()) + " -> " +
                      std::to_string(data.ys.cols()) + ") do not match snn.input_dim/output_dim (" +
                      std::to_string(config.snn.input_dim) + " -> " +
                      std::to_string(config.snn.output_dim) + ")");
  }

  io::RunManifest m = start_manifest("train", ctx);
  m.seed = config.seed;
  m.args["data"] = fs::absolute(data_dir).string();
  m.inputs[fs::absolute(train_csv).string()] = io::sha256_file(train_csv);
  for (const auto& [k, v] : io::to_kv(config)) m.resolved_config[k] = v;

  auto [params, history] = train::train(data, config);
  snn::save_checkpoint((fs::path(ctx.out_dir) / "checkpoint.txt").string(), params);
  io::atomic_write_file((fs::path(ctx.out_dir) / "history.csv").string(), history_csv(history));

  add_output(m, ctx.out_dir, "checkpoint.txt");
  add_output(m, ctx.out_dir, "history.csv", "sha256:ignore-col=wall_ms");
  finish_manifest(m, ctx.out_dir);
  return m;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

io::RunManifest run_eval(const std::string& checkpoint, const std::string& testset, int k,
                         const RunContext& ctx) {
  const snn::SNNParams params = snn::load_checkpoint(checkpoint);
  auto [inputs, truth] = io::read_test_ensembles_csv(testset);
  if (static_cast<int>(inputs.cols()) != params.config.input_dim ||
      static_cast<int>(truth[0].cols()) != params.config.output_dim) {
    throw ConfigError("testset dims (" + std::to_string(inputs.cols()) + " -> " +
                      std::to_string(truth[0].cols()) + ") do not match checkpoint dims (" +
                      std::to_string(params.config.input_dim) + " -> " +
                      std::to_string(params.config.output_dim) + ")");
  }
  const std::uint64_t seed = ctx.seed_override.value_or(1);

  io::RunManifest m = start_manifest("eval", ctx);
  m.seed = seed;
  m.args["checkpoint"] = fs::absolute(checkpoint).string();
  m.args["testset"] = fs::absolute(testset).string();
  m.args["k"] = std::to_string(k);
  m.inputs[fs::absolute(checkpoint).string()] = io::sha256_file(checkpoint);
  m.inputs[fs::absolute(testset).string()] = io::sha256_file(testset);
  m.resolved_config["eval.k"] = std::to_string(k);

  const std::vector<ot::EmpiricalMeasure> preds = train::evaluate(params, inputs, k, seed);
  const experiments::RelativeErrors errors = experiments::relative_errors(truth, preds);

  std::string metrics = "metric,value\n";
  metrics += "mean_err," + io::format_double(errors.mean_err) + "\n";
  metrics += "sd_err," + io::format_double(errors.sd_err) + "\n";
  metrics += "excluded_mean," + std::to_string(errors.excluded_mean) + "\n";
  metrics += "excluded_sd," + std::to_string(errors.excluded_sd) + "\n";
  io::atomic_write_file((fs::path(ctx.out_dir) / "metrics.csv").string(), metrics);

  std::string per_comp = "component,mean_err,sd_err\n";
  for (std::size_t j = 0; j < errors.per_component_mean.size(); ++j) {
    per_comp += std::to_string(j) + "," + io::format_double(errors.per_component_mean[j]) + "," +
                io::format_double(errors.per_component_sd[j]) + "\n";
  }
  io::atomic_write_file((fs::path(ctx.out_dir) / "per_component.csv").string(), per_comp);

  // Joint scatter of the first two components, truth vs prediction.
  {
    io::PlotSpec spec;
    spec.title = "Truth vs predicted joint samples (components 0, 1)";
    spec.xlabel = "y_0";
    spec.ylabel = "y_1";
    io::Series st, sp;
    st.label = "truth";
    st.color = "#1f77b4";
    st.line = false;
    sp.label = "predicted";
    sp.color = "#d62728";
    sp.line = false;
    const std::size_t show = std::min<std::size_t>(truth.size(), 10);
    for (std::size_t p = 0; p < show; ++p) {
      for (Eigen::Index r = 0; r < truth[p].rows(); ++r) {
        st.x.push_back(truth[p](r, 0));
        st.y.push_back(truth[p].cols() > 1 ? truth[p](r, 1) : 0.0);
      }
      for (Eigen::Index r = 0; r < preds[p].rows(); ++r) {
        sp.x.push_back(preds[p](r, 0));
        sp.y.push_back(preds[p].cols() > 1 ? preds[p](r, 1) : 0.0);
      }
    }
    spec.series = {st, sp};
    io::atomic_write_file((fs::path(ctx.out_dir) / "scatter.svg").string(),
                          io::render_svg(spec));
  }
  // Relative error per output component.
  {
    io::PlotSpec spec;
    spec.title = "Relative error per output component";
    spec.xlabel = "component";
    spec.ylabel = "relative error";
    io::Series sm, ss;
    sm.label = "mean error";
    sm.color = "#1f77b4";
    sm.markers = true;
    ss.label = "SD error";
    ss.color = "#d62728";
    ss.markers = true;
    for (std::size_t j = 0; j < errors.per_component_mean.size(); ++j) {
      sm.x.push_back(static_cast<double>(j));
      sm.y.push_back(errors.per_component_mean[j]);
      ss.x.push_back(static_cast<double>(j));
      ss.y.push_back(errors.per_component_sd[j]);
    }
    spec.series = {sm, ss};
    io::atomic_write_file((fs::path(ctx.out_dir) / "errors.svg").string(), io::render_svg(spec));
  }

  add_output(m, ctx.out_dir, "metrics.csv");
  add_output(m, ctx.out_dir, "per_component.csv");
  add_output(m, ctx.out_dir, "scatter.svg");
  add_output(m, ctx.out_dir, "errors.svg");
  finish_manifest(m, ctx.out_dir);
  return m;
}

// ---------------------------------------------------------------------------
// ode-recon
// ---------------------------------------------------------------------------

io::RunManifest run_ode_recon(const io::KeyValues& kv, const RunContext& ctx) {
  const experiments::ODEConfig ode = io::ode_from_kv(kv);
  train::TrainConfig config = io::train_from_kv(kv);
  if (ctx.seed_override) config.seed = *ctx.seed_override;
  config.snn.input_dim = experiments::kStateDim;
  config.snn.output_dim = experiments::kStateDim;
  const std::uint64_t data_seed = kv.get_u64("data.seed", config.seed + 1);

  io::RunManifest m = start_manifest("ode-recon", ctx);
  m.seed = config.seed;
  for (const auto& [k, v] : io::to_kv(ode)) m.resolved_config[k] = v;
  for (const auto& [k, v] : io::to_kv(config)) m.resolved_config[k] = v;
  m.resolved_config["data.seed"] = std::to_string(data_seed);

  const experiments::TrajectoryEnsemble truth = experiments::gen_truth_ensemble(ode, data_seed);
  io::write_trajectory_csv((fs::path(ctx.out_dir) / "truth.csv").string(), truth);

  // Untrained baseline: the initialized network before any gradient step.
  train::TrainConfig config0 = config;
  config0.epoch_max = 0;
  const experiments::OdeTrainResult untrained = experiments::train_ode_recon(ode, config0, truth);
  const experiments::OdeErrors err0 = experiments::ode_errors(
      truth, untrained.pred, ode, untrained.params, 64, 10, config.seed);

  const experiments::OdeTrainResult result = experiments::train_ode_recon(ode, config, truth);
  const experiments::OdeErrors err1 =
      experiments::ode_errors(truth, result.pred, ode, result.params, 64, 10, config.seed);

  io::write_trajectory_csv((fs::path(ctx.out_dir) / "pred.csv").string(), result.pred);
  snn::save_checkpoint((fs::path(ctx.out_dir) / "checkpoint.txt").string(), result.params);
  io::atomic_write_file((fs::path(ctx.out_dir) / "history.csv").string(),
                        history_csv(result.history));

  std::string metrics = "metric,value\n";
  metrics += "err_y," + io::format_double(err1.err_y) + "\n";
  metrics += "err_f," + io::format_double(err1.err_f) + "\n";
  metrics += "err_y_untrained," + io::format_double(err0.err_y) + "\n";
  metrics += "err_f_untrained," + io::format_double(err0.err_f) + "\n";
  io::atomic_write_file((fs::path(ctx.out_dir) / "metrics.csv").string(), metrics);

  std::string slices = "slice,t,err_y,err_y_untrained\n";
  for (std::size_t i = 0; i < err1.err_y_per_slice.size(); ++i) {
    slices += std::to_string(i + 1) + "," +
              io::format_double(truth.times(static_cast<Eigen::Index>(i))) + "," +
              io::format_double(err1.err_y_per_slice[i]) + "," +
              io::format_double(err0.err_y_per_slice[i]) + "\n";
  }
  io::atomic_write_file((fs::path(ctx.out_dir) / "slice_errors.csv").string(), slices);

  {
    io::PlotSpec spec;
    spec.title = "Trajectory reconstruction error over time";
    spec.xlabel = "t";
    spec.ylabel = "err_y";
    spec.logy = true;
    io::Series trained, baseline;
    trained.label = "trained";
    trained.color = "#1f77b4";
    trained.markers = true;
    baseline.label = "untrained";
    baseline.color = "#7f7f7f";
    baseline.markers = true;
    for (std::size_t i = 0; i < err1.err_y_per_slice.size(); ++i) {
      const double t = truth.times(static_cast<Eigen::Index>(i));
      if (err1.err_y_per_slice[i] > 0.0) {
        trained.x.push_back(t);
        trained.y.push_back(err1.err_y_per_slice[i]);
      }
      if (err0.err_y_per_slice[i] > 0.0) {
        baseline.x.push_back(t);
        baseline.y.push_back(err0.err_y_per_slice[i]);
      }
    }
    spec.series = {trained, baseline};
    io::atomic_write_file((fs::path(ctx.out_dir) / "err_y.svg").string(), io::render_svg(spec));
  }

  add_output(m, ctx.out_dir, "truth.csv");
  add_output(m, ctx.out_dir, "pred.csv");
  add_output(m, ctx.out_dir, "checkpoint.txt");
  add_output(m, ctx.out_dir, "history.csv", "sha256:ignore-col=wall_ms");
  add_output(m, ctx.out_dir, "metrics.csv");
  add_output(m, ctx.out_dir, "slice_errors.csv");
  add_output(m, ctx.out_dir, "err_y.svg");
  finish_manifest(m, ctx.out_dir);
  return m;
}

// ---------------------------------------------------------------------------
// rate-lab
// ---------------------------------------------------------------------------

std::string rate_csv(const lab::RateStudyResult& r) {
  std::string out = "N,mean_cost,stderr\n";
  for (std::size_t i = 0; i < r.n_grid.size(); ++i) {
    out += std::to_string(r.n_grid[i]) + "," + io::format_double(r.mean_cost[i]) + "," +
           io::format_double(r.std_error[i]) + "\n";
  }
  return out;
}

io::Series rate_series(const lab::RateStudyResult& r, const std::string& label,
                       const std::string& color) {
  io::Series s;
  s.label = label;
  s.color = color;
  s.markers = true;
  for (std::size_t i = 0; i < r.n_grid.size(); ++i) {
    s.x.push_back(static_cast<double>(r.n_grid[i]));
    s.y.push_back(r.mean_cost[i]);
  }
  return s;
}

io::RunManifest run_rate_lab(const io::KeyValues& kv, const RunContext& ctx) {
  lab::RateStudyConfig config = io::rate_from_kv(kv);
  if (ctx.seed_override) config.seed = *ctx.seed_override;

  io::RunManifest m = start_manifest("rate-lab", ctx);
  m.seed = config.seed;
  for (const auto& [k, v] : io::to_kv(config)) m.resolved_config[k] = v;

  json summary;
  io::PlotSpec spec;
  spec.title = "Two-sample squared W2 vs N";
  spec.xlabel = "N";
  spec.ylabel = "mean squared W2";
  spec.logx = true;
  spec.logy = true;

  if (config.heterogeneous) {
    const auto [hom, het] = lab::heterogeneity_comparison(config.d, config.c0, config.n_grid,
                                                          config.replicates, config.seed);
    io::atomic_write_file((fs::path(ctx.out_dir) / "rate_hom.csv").string(), rate_csv(hom));
    io::atomic_write_file((fs::path(ctx.out_dir) / "rate_het.csv").string(), rate_csv(het));
    const double diff = het.fit.slope - hom.fit.slope;
    const double se = std::sqrt(hom.fit.slope_stderr * hom.fit.slope_stderr +
                                het.fit.slope_stderr * het.fit.slope_stderr);
    summary["slope_hom"] = hom.fit.slope;
    summary["slope_het"] = het.fit.slope;
    summary["slope_diff"] = diff;
    summary["slope_diff_stderr"] = se;
    summary["indistinguishable"] = std::abs(diff) <= 2.0 * se;
    summary["moment_m_hom"] = hom.moment_m;
    summary["moment_m_het"] = het.moment_m;
    spec.series = {rate_series(hom, "homogeneous", "#1f77b4"),
                   rate_series(het, "heterogeneous", "#d62728")};
  } else {
    const lab::RateStudyResult r = lab::two_sample_w2_rate(config);
    io::atomic_write_file((fs::path(ctx.out_dir) / "rate.csv").string(), rate_csv(r));
    summary["slope"] = r.fit.slope;
    summary["slope_stderr"] = r.fit.slope_stderr;
    summary["intercept"] = r.fit.intercept;
    summary["moment_m"] = r.moment_m;
    spec.series = {rate_series(r, "d=" + std::to_string(config.d), "#1f77b4")};
  }
  summary["d"] = config.d;
  summary["replicates"] = config.replicates;
  io::atomic_write_file((fs::path(ctx.out_dir) / "summary.json").string(),
                        summary.dump(2) + "\n");
  io::atomic_write_file((fs::path(ctx.out_dir) / "rate.svg").string(), io::render_svg(spec));

  if (config.heterogeneous) {
    add_output(m, ctx.out_dir, "rate_hom.csv");
    add_output(m, ctx.out_dir, "rate_het.csv");
  } else {
    add_output(m, ctx.out_dir, "rate.csv");
  }
  add_output(m, ctx.out_dir, "summary.json");
  add_output(m, ctx.out_dir, "rate.svg");
  finish_manifest(m, ctx.out_dir);
  return m;
}

// ---------------------------------------------------------------------------
// robustness
// ---------------------------------------------------------------------------

struct RobustnessOutcome {
  io::RunManifest manifest;
  bool conclusive = true;
};

RobustnessOutcome run_robustness(const io::KeyValues& kv, const RunContext& ctx) {
  io::RobustnessConfig config = io::robustness_from_kv(kv);
  if (ctx.seed_override) config.seed = *ctx.seed_override;

  RobustnessOutcome outcome;
  io::RunManifest& m = outcome.manifest;
  m = start_manifest("robustness", ctx);
  m.seed = config.seed;
  for (const auto& [k, v] : io::to_kv(config)) m.resolved_config[k] = v;

  RngStream init_rng(derive_seed(config.seed, kTagInit));
  const snn::SNNParams base = snn::init(config.snn, init_rng);
  Eigen::VectorXd x(config.snn.input_dim);
  for (int i = 0; i < config.snn.input_dim; ++i) x(i) = config.x[static_cast<std::size_t>(i)];

  const lab::RobustnessResult result = lab::robustness_slope(
      base, x, config.eps_grid, config.k, config.repeats, config.floor_repeats,
      config.direction == "bias_out", config.seed);
  outcome.conclusive = result.conclusive;

  std::string csv = "eps,mean_w2,cleared\n";
  for (std::size_t i = 0; i < result.eps_grid.size(); ++i) {
    csv += io::format_double(result.eps_grid[i]) + "," + io::format_double(result.mean_w2[i]) +
           "," + (result.cleared[i] ? "1" : "0") + "\n";
  }
  io::atomic_write_file((fs::path(ctx.out_dir) / "robustness.csv").string(), csv);

  json summary;
  summary["floor"] = result.floor;
  summary["conclusive"] = result.conclusive;
  if (result.conclusive) {
    summary["slope"] = result.fit.slope;
    summary["intercept"] = result.fit.intercept;
    summary["residual_rms"] = result.fit.residual_rms;
  } else {
    summary["advice"] = result.advice;
  }
  io::atomic_write_file((fs::path(ctx.out_dir) / "summary.json").string(),
                        summary.dump(2) + "\n");

  {
    io::PlotSpec spec;
    spec.title = "Mean squared W2 vs perturbation size";
    spec.xlabel = "eps";
    spec.ylabel = "mean squared W2";
    spec.logx = true;
    spec.logy = true;
    io::Series s;
    s.label = "measured";
    s.color = "#1f77b4";
    s.markers = true;
    for (std::size_t i = 0; i < result.eps_grid.size(); ++i) {
      if (result.mean_w2[i] > 0.0) {
        s.x.push_back(result.eps_grid[i]);
        s.y.push_back(result.mean_w2[i]);
      }
    }
    io::Series floor_line;
    floor_line.label = "3x floor";
    floor_line.color = "#7f7f7f";
    if (result.floor > 0.0 && !result.eps_grid.empty()) {
      floor_line.x = {result.eps_grid.front(), result.eps_grid.back()};
      floor_line.y = {3.0 * result.floor, 3.0 * result.floor};
    }
    spec.series = {s, floor_line};
    io::atomic_write_file((fs::path(ctx.out_dir) / "robustness.svg").string(),
                          io::render_svg(spec));
  }

  add_output(m, ctx.out_dir, "robustness.csv");
  add_output(m, ctx.out_dir, "summary.json");
  add_output(m, ctx.out_dir, "robustness.svg");
  finish_manifest(m, ctx.out_dir);
  return outcome;
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

int run_replay(const std::string& manifest_path, std::string out_dir) {
  const io::RunManifest original = io::load_manifest(manifest_path);
  if (out_dir.empty()) {
    out_dir = (fs::path(manifest_path).parent_path() / "replay").string();
  }
  RunContext ctx;
  ctx.out_dir = out_dir;

  const io::KeyValues kv = io::KeyValues::from_map(original.resolved_config);
  io::RunManifest fresh;
  if (original.command == "gen-data") {
    fresh = run_gen_data(kv, ctx);
  } else if (original.command == "train") {
    fresh = run_train(kv, original.args.at("data"), ctx);
  } else if (original.command == "eval") {
    ctx.seed_override = original.seed;
    fresh = run_eval(original.args.at("checkpoint"), original.args.at("testset"),
                     std::stoi(original.args.at("k")), ctx);
  } else if (original.command == "ode-recon") {
    fresh = run_ode_recon(kv, ctx);
  } else if (original.command == "rate-lab") {
    fresh = run_rate_lab(kv, ctx);
  } else if (original.command == "robustness") {
    fresh = run_robustness(kv, ctx).manifest;
  } else {
    throw ConfigError("replay: unknown command '" + original.command + "' in manifest");
  }

  bool all_ok = true;
  for (const auto& [name, out] : original.outputs) {
    const auto it = fresh.outputs.find(name);
    const bool ok = it != fresh.outputs.end() && it->second.hash == out.hash;
    all_ok = all_ok && ok;
    std::cout << (ok ? "  [ok]       " : "  [mismatch] ") << name << "\n";
  }
  std::cout << (all_ok ? "replay reproduced all outputs\n"
                       : "replay FAILED to reproduce some outputs\n");
  return all_ok ? 0 : 1;
}

std::string resolve_out_dir(const std::string& flag_value) {
  const char* env = std::getenv("W2SNN_OUT");
  std::string dir = env && *env ? env : flag_value;
  if (dir.empty()) throw ConfigError("--out <dir> is required (or set W2SNN_OUT)");
  fs::create_directories(dir);
  return dir;
}

void apply_threads(int flag_value) {
  const char* env = std::getenv("W2SNN_THREADS");
  if (env && *env) {
    set_thread_count(std::atoi(env));
  } else {
    set_thread_count(flag_value);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic neural networks trained with the local squared W2 loss"};
  app.require_subcommand(1);

  std::string config_path, out_flag, data_dir, checkpoint, testset, manifest_path, replay_out;
  int k = 20;
  int threads = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config) {
      cmd->add_option("--config", config_path, "config file (flat key = value)")->required();
    }
    cmd->add_option("--out", out_flag, "output directory");
    cmd->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
      seed_given = true;
    });
    cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate a dataset or truth ensemble");
  add_common(gen, true);
  CLI::App* tr = app.add_subcommand("train", "train an SNN on a generated dataset");
  add_common(tr, true);
  tr->add_option("--data", data_dir, "directory holding train.csv")->required();
  CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint on a test set");
  add_common(ev, false);
  ev->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  ev->add_option("--testset", testset, "test ensemble csv")->required();
  ev->add_option("--k", k, "prediction ensemble size");
  CLI::App* ode = app.add_subcommand("ode-recon", "oscillator ensemble reconstruction");
  add_common(ode, true);
  CLI::App* rate = app.add_subcommand("rate-lab", "two-sample W2 convergence-rate study");
  add_common(rate, true);
  CLI::App* rob = app.add_subcommand("robustness", "parameter perturbation slope study");
  add_common(rob, true);
  CLI::App* rep = app.add_subcommand("replay", "re-run a manifest and verify output hashes");
  rep->add_option("manifest", manifest_path, "manifest.json to replay")->required();
  rep->add_option("--out", replay_out, "replay output directory");
  rep->add_option("--threads", threads, "worker threads (0 = all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    apply_threads(threads);
    RunContext ctx;
    if (seed_given) ctx.seed_override = seed;

    if (rep->parsed()) return run_replay(manifest_path, replay_out);
    ctx.out_dir = resolve_out_dir(out_flag);

    if (gen->parsed()) {
      run_gen_data(io::KeyValues::parse_file(config_path, io::schema_gen_data()), ctx);
    } else if (tr->parsed()) {
      run_train(io::KeyValues::parse_file(config_path, io::schema_train()), data_dir, ctx);
    } else if (ev->parsed()) {
      run_eval(checkpoint, testset, k, ctx);
    } else if (ode->parsed()) {
      run_ode_recon(io::KeyValues::parse_file(config_path, io::schema_ode_recon()), ctx);
    } else if (rate->parsed()) {
      run_rate_lab(io::KeyValues::parse_file(config_path, io::schema_rate_lab()), ctx);
    } else if (rob->parsed()) {
      const RobustnessOutcome outcome =
          run_robustness(io::KeyValues::parse_file(config_path, io::schema_robustness()), ctx);
      if (!outcome.conclusive) {
        std::cerr << "robustness study inconclusive; see summary.json\n";
        return 4;
      }
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InconclusiveError& e) {
    std::cerr << "inconclusive: " << e.what() << "\n";
    return 4;
  } catch (const NumericError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
