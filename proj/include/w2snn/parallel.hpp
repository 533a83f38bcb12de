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

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace w2snn {

// Worker count used by parallel_for. 0 means hardware concurrency.
// Results never depend on this value: work is split into fixed-size chunks
// and every reduction happens in chunk order on the calling thread.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [0, n). Items are grouped into fixed-size chunks that
// workers pull from an atomic counter; fn must only write to per-item state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Chunked variant: fn(chunk_index, begin, end). Chunk boundaries depend only
// on n and chunk_size, never on the worker count, so per-chunk partial
// results can be reduced deterministically by chunk index.
void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

std::size_t num_chunks(std::size_t n, std::size_t chunk_size);

}  // namespace w2snn
