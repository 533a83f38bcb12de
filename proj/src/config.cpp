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

#include "w2snn/config.hpp"

#include <algorithm>
#include <sstream>

#include "w2snn/errors.hpp"
#include "w2snn/io_util.hpp"

namespace w2snn::io {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::istringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& want) {
  throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as " + want);
}

}  // namespace

KeyValues KeyValues::parse_text(const std::string& text, const Schema& schema) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto entry = std::find_if(schema.begin(), schema.end(),
                                    [&](const SchemaEntry& e) { return e.key == key; });
    if (entry == schema.end()) {
      std::string msg = "unknown config key '" + key + "'. Expected one of:\n";
      for (const SchemaEntry& e : schema) msg += "  " + e.key + " = " + e.help + "\n";
      throw ConfigError(msg);
    }
    if (kv.entries_.count(key)) {
      throw ConfigError("config key '" + key + "' given twice");
    }
    kv.entries_[key] = value;
  }
  return kv;
}

KeyValues KeyValues::parse_file(const std::string& path, const Schema& schema) {
  return parse_text(read_file(path), schema);
}

KeyValues KeyValues::from_map(const std::map<std::string, std::string>& entries) {
  KeyValues kv;
  kv.entries_ = entries;
  return kv;
}

bool KeyValues::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) bad_value(key, it->second, "a real number");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, it->second, "a real number");
  }
}

int KeyValues::get_int(const std::string& key, int fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    std::size_t used = 0;
    const int v = std::stoi(it->second, &used);
    if (used != it->second.size()) bad_value(key, it->second, "an integer");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, it->second, "an integer");
  }
}

std::uint64_t KeyValues::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(it->second, &used);
    if (used != it->second.size()) bad_value(key, it->second, "an unsigned integer");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, it->second, "an unsigned integer");
  }
}

std::vector<int> KeyValues::get_int_list(const std::string& key,
                                         const std::vector<int>& fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<int> out;
  for (const std::string& item : split_list(it->second)) {
    try {
      out.push_back(std::stoi(item));
    } catch (...) {
      bad_value(key, it->second, "a comma-separated integer list");
    }
  }
  return out;
}

std::vector<double> KeyValues::get_double_list(const std::string& key,
                                               const std::vector<double>& fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<double> out;
  for (const std::string& item : split_list(it->second)) {
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      bad_value(key, it->second, "a comma-separated number list");
    }
  }
  return out;
}

namespace {

const Schema& snn_schema() {
  static const Schema s = {
      {"snn.input_dim", "int, network input dimension"},
      {"snn.output_dim", "int, network output dimension"},
      {"snn.hidden_widths", "comma list of hidden layer widths, e.g. 40,40,40,40"},
      {"snn.activation", "relu | elu"},
      {"snn.forward_mode", "normal | resnet"},
      {"snn.init_scale", "real, stddev of the a/b initialization"},
      {"snn.sigma_init", "real, initial weight stddev"},
  };
  return s;
}

const Schema& train_schema() {
  static const Schema s = {
      {"train.learning_rate", "real, Adam learning rate"},
      {"train.epoch_max", "int, number of training epochs"},
      {"train.epoch_update", "int, epochs between minibatch refreshes"},
      {"train.n_batch", "int, minibatch size"},
      {"train.delta", "real, neighborhood radius"},
      {"train.n0", "int, minimum neighborhood size for eligibility"},
      {"train.seed", "u64, master seed"},
      {"train.beta1", "real, Adam beta1"},
      {"train.beta2", "real, Adam beta2"},
      {"train.adam_eps", "real, Adam epsilon"},
      {"train.grad_clip", "real, global-norm gradient clip (0 disables)"},
  };
  return s;
}

const Schema& ex1_schema() {
  static const Schema s = {
      {"ex1.d", "int, output dimension"},
      {"ex1.d0", "int, noise dimension"},
      {"ex1.noise", "constant | exponential | scaled"},
      {"ex1.s", "real, base noise scale"},
      {"ex1.n_train", "int, training samples"},
      {"ex1.n_test", "int, test points"},
      {"ex1.k_test", "int, truth draws per test point"},
      {"ex1.coeff_seed", "u64, coefficient draw seed"},
  };
  return s;
}

const Schema& ode_schema() {
  static const Schema s = {
      {"ode.d", "int, independent damping parameters"},
      {"ode.sigma", "real, damping log-noise scale"},
      {"ode.sigma0", "real, initial-condition noise"},
      {"ode.dt", "real, slice spacing"},
      {"ode.n_slices", "int, number of time slices"},
      {"ode.n_traj", "int, trajectories"},
      {"ode.substeps", "int, RK4 substeps per slice"},
  };
  return s;
}

void append(Schema& into, const Schema& from) { into.insert(into.end(), from.begin(), from.end()); }

}  // namespace

Schema schema_gen_data() {
  Schema s = {{"data.kind", "example1 | ode"}, {"data.seed", "u64, generation seed"}};
  append(s, ex1_schema());
  append(s, ode_schema());
  return s;
}

Schema schema_train() {
  Schema s = train_schema();
  append(s, snn_schema());
  return s;
}

Schema schema_ode_recon() {
  Schema s = ode_schema();
  append(s, train_schema());
  append(s, snn_schema());
  Schema extra = {{"data.seed", "u64, truth ensemble seed"}};
  append(s, extra);
  return s;
}

Schema schema_rate_lab() {
  static const Schema s = {
      {"rate.d", "int, dimension"},
      {"rate.n_grid", "comma list of sample sizes, increasing"},
      {"rate.replicates", "int, replicate pairs per N"},
      {"rate.c0", "real, heterogeneity constant; omit for a single homogeneous study"},
      {"rate.scale", "real, distribution scale (0 gives a point mass)"},
      {"rate.seed", "u64, study seed"},
  };
  return s;
}

Schema schema_robustness() {
  Schema s = {
      {"robust.eps_grid", "comma list of perturbation sizes, increasing"},
      {"robust.k", "int, ensemble size"},
      {"robust.repeats", "int, repeats per eps"},
      {"robust.floor_repeats", "int, independent ensemble pairs for the floor"},
      {"robust.direction", "generic | bias_out"},
      {"robust.x", "comma list, probe input"},
      {"robust.seed", "u64, study seed"},
  };
  append(s, snn_schema());
  return s;
}

std::string schema_help(const Schema& schema) {
  std::string out;
  for (const SchemaEntry& e : schema) out += e.key + " = " + e.help + "\n";
  return out;
}

snn::SNNConfig snn_from_kv(const KeyValues& kv) {
  snn::SNNConfig c;
  c.input_dim = kv.get_int("snn.input_dim", 2);
  c.output_dim = kv.get_int("snn.output_dim", 10);
  c.hidden = kv.get_int_list("snn.hidden_widths", {40, 40, 40, 40});
  c.activation = snn::activation_from_name(kv.get_string("snn.activation", "elu"));
  c.mode = snn::mode_from_name(kv.get_string("snn.forward_mode", "resnet"));
  c.init_scale = kv.get_double("snn.init_scale", 0.01);
  c.sigma_init = kv.get_double("snn.sigma_init", 0.01);
  return c;
}

train::TrainConfig train_from_kv(const KeyValues& kv) {
  train::TrainConfig c;
  c.learning_rate = kv.get_double("train.learning_rate", 0.005);
  c.epoch_max = kv.get_int("train.epoch_max", 1000);
  c.epoch_update = kv.get_int("train.epoch_update", 20);
  c.n_batch = kv.get_int("train.n_batch", 128);
  c.delta = kv.get_double("train.delta", 0.25);
  c.n0 = kv.get_int("train.n0", 4);
  c.seed = kv.get_u64("train.seed", 1);
  c.beta1 = kv.get_double("train.beta1", 0.9);
  c.beta2 = kv.get_double("train.beta2", 0.999);
  c.adam_eps = kv.get_double("train.adam_eps", 1e-8);
  c.grad_clip = kv.get_double("train.grad_clip", 0.0);
  c.snn = snn_from_kv(kv);
  return c;
}

experiments::Example1Config example1_from_kv(const KeyValues& kv) {
  experiments::Example1Config c;
  c.d = kv.get_int("ex1.d", 10);
  c.d0 = kv.get_int("ex1.d0", 3);
  const std::string noise = kv.get_string("ex1.noise", "constant");
  if (noise == "constant") {
    c.noise = experiments::NoiseSpec::kConstant;
  } else if (noise == "exponential") {
    c.noise = experiments::NoiseSpec::kExponential;
  } else if (noise == "scaled") {
    c.noise = experiments::NoiseSpec::kScaled;
  } else {
    throw ConfigError("ex1.noise: expected constant|exponential|scaled, got '" + noise + "'");
  }
  c.s = kv.get_double("ex1.s", 0.1);
  c.n_train = kv.get_int("ex1.n_train", 4000);
  c.n_test = kv.get_int("ex1.n_test", 100);
  c.k_test = kv.get_int("ex1.k_test", 20);
  c.coeff_seed = kv.get_u64("ex1.coeff_seed", 7);
  return c;
}

experiments::ODEConfig ode_from_kv(const KeyValues& kv) {
  experiments::ODEConfig c;
  c.d = kv.get_int("ode.d", 5);
  c.sigma = kv.get_double("ode.sigma", 1.0);
  c.sigma0 = kv.get_double("ode.sigma0", 0.01);
  c.dt = kv.get_double("ode.dt", 0.1);
  c.n_slices = kv.get_int("ode.n_slices", 30);
  c.n_traj = kv.get_int("ode.n_traj", 300);
  c.substeps = kv.get_int("ode.substeps", 5);
  return c;
}

lab::RateStudyConfig rate_from_kv(const KeyValues& kv) {
  lab::RateStudyConfig c;
  c.d = kv.get_int("rate.d", 8);
  c.n_grid = kv.get_int_list("rate.n_grid", {32, 64, 128, 256, 512, 1024});
  c.replicates = kv.get_int("rate.replicates", 20);
  c.heterogeneous = kv.has("rate.c0");
  c.c0 = kv.get_double("rate.c0", 1.0);
  c.scale = kv.get_double("rate.scale", 1.0);
  c.seed = kv.get_u64("rate.seed", 1);
  return c;
}

RobustnessConfig robustness_from_kv(const KeyValues& kv) {
  RobustnessConfig c;
  c.eps_grid = kv.get_double_list("robust.eps_grid", {0.05, 0.1, 0.2, 0.4});
  c.k = kv.get_int("robust.k", 4096);
  c.repeats = kv.get_int("robust.repeats", 10);
  c.floor_repeats = kv.get_int("robust.floor_repeats", 5);
  c.direction = kv.get_string("robust.direction", "generic");
  if (c.direction != "generic" && c.direction != "bias_out") {
    throw ConfigError("robust.direction: expected generic|bias_out, got '" + c.direction + "'");
  }
  c.seed = kv.get_u64("robust.seed", 1);
  snn::SNNConfig net;
  net.input_dim = 2;
  net.output_dim = 3;
  net.hidden = {40, 40};
  net.activation = ad::Activation::kRelu;
  net.mode = snn::ForwardMode::kNormal;
  net.init_scale = 0.25;
  net.sigma_init = 0.005;
  if (kv.has("snn.input_dim") || kv.has("snn.output_dim") || kv.has("snn.hidden_widths") ||
      kv.has("snn.activation") || kv.has("snn.forward_mode") || kv.has("snn.init_scale") ||
      kv.has("snn.sigma_init")) {
    net.input_dim = kv.get_int("snn.input_dim", net.input_dim);
    net.output_dim = kv.get_int("snn.output_dim", net.output_dim);
    net.hidden = kv.get_int_list("snn.hidden_widths", net.hidden);
    net.activation = snn::activation_from_name(kv.get_string("snn.activation", "relu"));
    net.mode = snn::mode_from_name(kv.get_string("snn.forward_mode", "normal"));
    net.init_scale = kv.get_double("snn.init_scale", net.init_scale);
    net.sigma_init = kv.get_double("snn.sigma_init", net.sigma_init);
  }
  c.snn = net;
  c.x = kv.get_double_list("robust.x", std::vector<double>(c.snn.input_dim, 1.0));
  return c;
}

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> to_kv(const snn::SNNConfig& c) {
  return {
      {"snn.input_dim", std::to_string(c.input_dim)},
      {"snn.output_dim", std::to_string(c.output_dim)},
      {"snn.hidden_widths", join_ints(c.hidden)},
      {"snn.activation", snn::activation_name(c.activation)},
      {"snn.forward_mode", snn::mode_name(c.mode)},
      {"snn.init_scale", format_double(c.init_scale)},
      {"snn.sigma_init", format_double(c.sigma_init)},
  };
}

std::map<std::string, std::string> to_kv(const train::TrainConfig& c) {
  std::map<std::string, std::string> kv = to_kv(c.snn);
  kv["train.learning_rate"] = format_double(c.learning_rate);
  kv["train.epoch_max"] = std::to_string(c.epoch_max);
  kv["train.epoch_update"] = std::to_string(c.epoch_update);
  kv["train.n_batch"] = std::to_string(c.n_batch);
  kv["train.delta"] = format_double(c.delta);
  kv["train.n0"] = std::to_string(c.n0);
  kv["train.seed"] = std::to_string(c.seed);
  kv["train.beta1"] = format_double(c.beta1);
  kv["train.beta2"] = format_double(c.beta2);
  kv["train.adam_eps"] = format_double(c.adam_eps);
  kv["train.grad_clip"] = format_double(c.grad_clip);
  return kv;
}

std::map<std::string, std::string> to_kv(const experiments::Example1Config& c) {
  const char* noise = c.noise == experiments::NoiseSpec::kConstant      ? "constant"
                      : c.noise == experiments::NoiseSpec::kExponential ? "exponential"
                                                                        : "scaled";
  return {
      {"ex1.d", std::to_string(c.d)},
      {"ex1.d0", std::to_string(c.d0)},
      {"ex1.noise", noise},
      {"ex1.s", format_double(c.s)},
      {"ex1.n_train", std::to_string(c.n_train)},
      {"ex1.n_test", std::to_string(c.n_test)},
      {"ex1.k_test", std::to_string(c.k_test)},
      {"ex1.coeff_seed", std::to_string(c.coeff_seed)},
  };
}

std::map<std::string, std::string> to_kv(const experiments::ODEConfig& c) {
  return {
      {"ode.d", std::to_string(c.d)},
      {"ode.sigma", format_double(c.sigma)},
      {"ode.sigma0", format_double(c.sigma0)},
      {"ode.dt", format_double(c.dt)},
      {"ode.n_slices", std::to_string(c.n_slices)},
      {"ode.n_traj", std::to_string(c.n_traj)},
      {"ode.substeps", std::to_string(c.substeps)},
  };
}

std::map<std::string, std::string> to_kv(const lab::RateStudyConfig& c) {
  std::map<std::string, std::string> kv = {
      {"rate.d", std::to_string(c.d)},
      {"rate.n_grid", join_ints(c.n_grid)},
      {"rate.replicates", std::to_string(c.replicates)},
      {"rate.scale", format_double(c.scale)},
      {"rate.seed", std::to_string(c.seed)},
  };
  if (c.heterogeneous) kv["rate.c0"] = format_double(c.c0);
  return kv;
}

std::map<std::string, std::string> to_kv(const RobustnessConfig& c) {
  std::map<std::string, std::string> kv = to_kv(c.snn);
  kv["robust.eps_grid"] = join_doubles(c.eps_grid);
  kv["robust.k"] = std::to_string(c.k);
  kv["robust.repeats"] = std::to_string(c.repeats);
  kv["robust.floor_repeats"] = std::to_string(c.floor_repeats);
  kv["robust.direction"] = c.direction;
  kv["robust.x"] = join_doubles(c.x);
  kv["robust.seed"] = std::to_string(c.seed);
  return kv;
}

}  // namespace w2snn::io
