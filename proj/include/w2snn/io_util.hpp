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

#include <string>

namespace w2snn::io {

// Write via temp file + rename so readers never observe partial content.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Hex SHA-256 of a byte string / of a file's content.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

// Formats a double so that parsing the text recovers the bits exactly.
std::string format_double(double v);

}  // namespace w2snn::io
