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
#include <map>
#include <string>
#include <vector>

#include "w2snn/experiments.hpp"
#include "w2snn/theory_lab.hpp"
#include "w2snn/trainer.hpp"

namespace w2snn::io {

// One schema line per allowed key: "<key> = <type/help>".
struct SchemaEntry {
  std::string key;
  std::string help;
};
using Schema = std::vector<SchemaEntry>;

// Flat `key = value` document with `#` comments and section-prefixed keys
// (train.learning_rate, snn.hidden_widths, ode.dt). Unknown keys are
// rejected with the expected schema line.
class KeyValues {
 public:
  static KeyValues parse_text(const std::string& text, const Schema& schema);
  static KeyValues parse_file(const std::string& path, const Schema& schema);
  static KeyValues from_map(const std::map<std::string, std::string>& entries);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

// Per-command schemas.
Schema schema_gen_data();
Schema schema_train();
Schema schema_ode_recon();
Schema schema_rate_lab();
Schema schema_robustness();
std::string schema_help(const Schema& schema);

// Section decoders with Table-1 defaults; every decoder also re-emits the
// fully resolved key set (for manifests and replay).
snn::SNNConfig snn_from_kv(const KeyValues& kv);
train::TrainConfig train_from_kv(const KeyValues& kv);
experiments::Example1Config example1_from_kv(const KeyValues& kv);
experiments::ODEConfig ode_from_kv(const KeyValues& kv);
lab::RateStudyConfig rate_from_kv(const KeyValues& kv);

struct RobustnessConfig {
  std::vector<double> eps_grid = {0.05, 0.1, 0.2, 0.4};
  int k = 4096;
  int repeats = 10;
  int floor_repeats = 5;
  std::string direction = "generic";  // generic | bias_out
  std::vector<double> x;              // probe input; defaults to ones
  std::uint64_t seed = 1;
  snn::SNNConfig snn;
};
RobustnessConfig robustness_from_kv(const KeyValues& kv);

std::map<std::string, std::string> to_kv(const snn::SNNConfig& c);
std::map<std::string, std::string> to_kv(const train::TrainConfig& c);
std::map<std::string, std::string> to_kv(const experiments::Example1Config& c);
std::map<std::string, std::string> to_kv(const experiments::ODEConfig& c);
std::map<std::string, std::string> to_kv(const lab::RateStudyConfig& c);
std::map<std::string, std::string> to_kv(const RobustnessConfig& c);

}  // namespace w2snn::io
