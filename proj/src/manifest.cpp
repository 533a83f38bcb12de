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

#include "w2snn/manifest.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "w2snn/errors.hpp"
#include "w2snn/io_util.hpp"

namespace w2snn::io {

using nlohmann::json;

void save_manifest(const std::string& path, const RunManifest& manifest) {
  json j;
  j["command"] = manifest.command;
  j["seed"] = manifest.seed;
  j["resolved_config"] = manifest.resolved_config;
  j["args"] = manifest.args;
  j["inputs"] = manifest.inputs;
  json outs = json::object();
  for (const auto& [name, out] : manifest.outputs) {
    outs[name] = {{"hash", out.hash}, {"kind", out.kind}};
  }
  j["outputs"] = outs;
  j["created_utc"] = manifest.created_utc;
  j["tool_version"] = manifest.tool_version;
  atomic_write_file(path, j.dump(2) + "\n");
}

RunManifest load_manifest(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IoError("manifest '" + path + "': " + e.what());
  }
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.resolved_config = j.at("resolved_config").get<std::map<std::string, std::string>>();
    if (j.contains("args")) m.args = j.at("args").get<std::map<std::string, std::string>>();
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    for (const auto& [name, out] : j.at("outputs").items()) {
      RunManifest::Output o;
      o.hash = out.at("hash").get<std::string>();
      o.kind = out.at("kind").get<std::string>();
      m.outputs[name] = o;
    }
    m.created_utc = j.value("created_utc", "");
    m.tool_version = j.value("tool_version", "");
  } catch (const json::exception& e) {
    throw IoError("manifest '" + path + "': missing field (" + e.what() + ")");
  }
  return m;
}

std::string csv_hash_ignoring_column(const std::string& content, const std::string& column) {
  std::istringstream in(content);
  std::string line;
  std::string normalized;
  int target = -1;
  bool first = true;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (first) {
      first = false;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == column) target = static_cast<int>(i);
      }
    } else if (target >= 0 && target < static_cast<int>(fields.size())) {
      fields[static_cast<std::size_t>(target)] = "-";
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) normalized += ',';
      normalized += fields[i];
    }
    normalized += '\n';
  }
  return sha256_hex(normalized);
}

std::string hash_output(const std::string& dir, const std::string& filename,
                        const std::string& kind) {
  const std::string path = (std::filesystem::path(dir) / filename).string();
  if (kind == "sha256") return sha256_file(path);
  const std::string prefix = "sha256:ignore-col=";
  if (kind.rfind(prefix, 0) == 0) {
    return csv_hash_ignoring_column(read_file(path), kind.substr(prefix.size()));
  }
  throw IoError("unknown output hash kind '" + kind + "'");
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace w2snn::io
