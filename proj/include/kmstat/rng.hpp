// Copyright 2026 The kmstat Authors
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

#ifndef KMSTAT_RNG_HPP_
#define KMSTAT_RNG_HPP_

#include <array>
#include <cstdint>

namespace kmstat {

/// Deterministic random stream (xoshiro256++ seeded through SplitMix64).
///
/// Streams are cheap to construct and meant to be derived per task:
/// `Rng::substream(master, index)` gives an independent stream for each
/// (master seed, index) pair, so parallel replications are reproducible
/// regardless of scheduling order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream keyed by (master seed, stream index).
  static Rng substream(std::uint64_t master_seed, std::uint64_t stream_index);

  std::uint64_t next_u64();

  /// Uniform draw in [0, 1).
  double uniform();

  /// Uniform draw in the open interval (0, 1); safe for inverse-CDF use.
  double uniform_open();

  /// Standard normal draw (Marsaglia polar method).
  double normal();

 private:
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace kmstat

#endif  // KMSTAT_RNG_HPP_
