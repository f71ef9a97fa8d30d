// Copyright 2026 The hetsl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>

namespace hetsl {

// SplitMix64 finalizer. Used only to derive well-separated seeds for
// substreams; the streams themselves are mt19937_64.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Seed for substream `stream` of a run seeded with `seed`. Distinct
// (seed, domain, stream) triples give statistically independent streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t domain,
                          std::uint64_t stream) noexcept;

// Seed domains keep graph draws, observation draws and profile generation
// from sharing substreams.
namespace seed_domain {
inline constexpr std::uint64_t kGraph = 0x67726170ULL;
inline constexpr std::uint64_t kObservation = 0x6f627376ULL;
inline constexpr std::uint64_t kProfile = 0x70726f66ULL;
inline constexpr std::uint64_t kSynthetic = 0x73796e74ULL;
}  // namespace seed_domain

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits; platform independent.
  double uniform() noexcept {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  std::uint64_t next() noexcept { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hetsl
