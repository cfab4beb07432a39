#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "veridict/core.hpp"

namespace veridict {

// Seeded random source. The engine's output sequence is fixed by the
// standard; the conversions below are written out so results do not depend
// on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t hash_string(std::string_view text);

// Walker/Vose alias table over the support (positive-probability tokens) of
// a distribution; O(1) draws.
class AliasTable {
 public:
  explicit AliasTable(const Distribution& dist);

  TokenId draw(Rng& rng) const;

 private:
  std::vector<TokenId> tokens_;
  std::vector<double> threshold_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace veridict
