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

#include "w2snn/rng.hpp"

namespace w2snn::testutil {

inline Eigen::MatrixXd random_cloud(int n, int d, RngStream& rng, double scale = 1.0) {
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

// Minimal XML well-formedness check: tag nesting, attribute quoting, a single
// root element. Good enough to catch malformed SVG emission.
inline bool xml_well_formed(const std::string& text, std::string* why = nullptr) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  std::vector<std::string> stack;
  std::size_t i = 0;
  const std::size_t n = text.size();
  bool seen_root = false;
  bool root_closed = false;
  while (i < n) {
    if (text[i] != '<') {
      if (text[i] == '>') return fail("stray '>' outside markup");
      ++i;
      continue;
    }
    if (text.compare(i, 5, "<?xml") == 0) {
      const auto end = text.find("?>", i);
      if (end == std::string::npos) return fail("unterminated xml declaration");
      i = end + 2;
      continue;
    }
    if (text.compare(i, 4, "<!--") == 0) {
      const auto end = text.find("-->", i);
      if (end == std::string::npos) return fail("unterminated comment");
      i = end + 3;
      continue;
    }
    const bool closing = i + 1 < n && text[i + 1] == '/';
    std::size_t j = i + (closing ? 2 : 1);
    std::size_t name_start = j;
    while (j < n && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == ':' ||
                     text[j] == '-' || text[j] == '_')) {
      ++j;
    }
    const std::string name = text.substr(name_start, j - name_start);
    if (name.empty()) return fail("empty tag name");
    // Scan to the closing '>' while checking attribute quote pairing.
    bool self_closing = false;
    bool in_quote = false;
    char quote = '"';
    for (; j < n; ++j) {
      const char c = text[j];
      if (in_quote) {
        if (c == quote) in_quote = false;
        continue;
      }
      if (c == '"' || c == '\'') {
        in_quote = true;
        quote = c;
      } else if (c == '>') {
        self_closing = j > 0 && text[j - 1] == '/';
        break;
      } else if (c == '<') {
        return fail("'<' inside tag " + name);
      }
    }
    if (j >= n) return fail("unterminated tag " + name);
    if (in_quote) return fail("unterminated attribute quote in " + name);
    if (closing) {
      if (stack.empty() || stack.back() != name) return fail("mismatched </" + name + ">");
      stack.pop_back();
      if (stack.empty()) root_closed = true;
    } else if (!self_closing) {
      if (root_closed) return fail("content after root element");
      if (stack.empty() && seen_root) return fail("multiple root elements");
      stack.push_back(name);
      seen_root = true;
    } else if (stack.empty()) {
      if (seen_root && root_closed) return fail("content after root element");
      seen_root = true;
      root_closed = true;
    }
    i = j + 1;
  }
  if (!stack.empty()) return fail("unclosed tag " + stack.back());
  return seen_root;
}

}  // namespace w2snn::testutil
