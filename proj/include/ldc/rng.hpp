/**
 * Copyright 2026 the ldc authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file rng.hpp
 * @brief Deterministic random number generation.
 *
 * All stochastic code in the library draws from this generator so that a
 * (seed, replication) pair reproduces a simulation bit-for-bit on any
 * platform.  The Gaussian transform is implemented by hand because the
 * stdlib's normal_distribution is implementation-defined and would break
 * cross-platform reproducibility.
 */

#ifndef LDC_RNG_HPP
#define LDC_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ldc {

/**
 * One step of the SplitMix64 sequence; advances @p state and returns the
 * next output.  Used to spread user-supplied seeds over the full 64-bit
 * space before seeding the main engine.
 */
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/**
 * Deterministic random stream: a mt19937_64 engine seeded through
 * SplitMix64, with hand-rolled uniform and Gaussian transforms.
 */
class Rng {
 public:
  /** Seeds the stream from a single 64-bit value. */
  explicit Rng(std::uint64_t seed) : has_spare_(false), spare_(0.0) {
    std::uint64_t state = seed;
    engine_.seed(splitmix64(state));
  }

  /**
   * Derives the independent stream for one replication of an experiment.
   * Distinct (base_seed, replication) pairs map to distinct engine seeds.
   */
  static Rng for_replication(std::uint64_t base_seed,
                             std::uint64_t replication) {
    std::uint64_t state = base_seed;
    std::uint64_t mixed = splitmix64(state);
    state = mixed ^ (replication + 0x9E3779B97F4A7C15ULL);
    return Rng(splitmix64(state));
  }

  /** Next raw 64-bit draw from the engine. */
  std::uint64_t next_u64() { return engine_(); }

  /** Uniform double in [0, 1) with 53 random mantissa bits. */
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /**
   * Standard Gaussian via the Box-Muller transform.  Pairs are generated
   * together and the second value cached, so each call consumes either two
   * uniforms or none.
   */
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // 1 - u lies in (0, 1], keeping the log argument strictly positive.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_;
  double spare_;
};

}  // namespace ldc

#endif  // LDC_RNG_HPP
