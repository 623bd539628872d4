// Copyright 2026 The pacvi Authors
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

#ifndef PACVI_RANDOM_H_
#define PACVI_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pacvi {

// Every random draw in the library comes from a generator keyed by
// (seed, purpose, index...). Keys are folded through splitmix64, so the value
// of a stream never depends on which other streams were consumed first.
enum class StreamPurpose : std::uint64_t {
  kInit = 1,
  kTrainNoise = 2,
  kShuffle = 3,
  kEnvStarts = 4,
  kPermutation = 5,
  kEvalNoise = 6,
  kHoldoutNoise = 7,
};

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t stream_key(std::uint64_t seed, StreamPurpose purpose,
                         std::initializer_list<std::uint64_t> path = {});

inline std::mt19937_64 make_stream(
    std::uint64_t seed, StreamPurpose purpose,
    std::initializer_list<std::uint64_t> path = {}) {
  return std::mt19937_64(stream_key(seed, purpose, path));
}

}  // namespace pacvi

#endif  // PACVI_RANDOM_H_
