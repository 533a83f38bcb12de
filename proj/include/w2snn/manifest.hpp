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

namespace w2snn::io {

// Record of one CLI run: the fully resolved configuration plus content
// hashes of all inputs and produced artifacts. Replaying a manifest re-runs
// the command from the resolved configuration and must reproduce every
// output hash.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> resolved_config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;  // absolute path -> sha256

  struct Output {
    std::string hash;
    // "sha256" for bitwise hashes; "sha256:ignore-col=<name>" for CSVs whose
    // named column holds wall-clock measurements.
    std::string kind = "sha256";
  };
  std::map<std::string, std::string> args;     // extra command arguments
  std::map<std::string, Output> outputs;       // filename relative to out dir
  std::string created_utc;
  std::string tool_version;
};

void save_manifest(const std::string& path, const RunManifest& manifest);
RunManifest load_manifest(const std::string& path);

// Hash of a CSV with the named column's values masked out (used for the
// wall_ms history column, which is not reproducible by nature).
std::string csv_hash_ignoring_column(const std::string& content, const std::string& column);

// Hashes `filename` inside `dir` according to `kind`.
std::string hash_output(const std::string& dir, const std::string& filename,
                        const std::string& kind);

std::string utc_timestamp();

}  // namespace w2snn::io
