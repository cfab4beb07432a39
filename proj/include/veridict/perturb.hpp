#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "veridict/backend.hpp"
#include "veridict/core.hpp"

namespace veridict {

enum class PerturbMethod { Mask, Sample };

// k rewritten bodies of one original request. Positions are body indices.
struct PerturbationSet {
  ScoringRequest original;
  std::vector<std::vector<TokenId>> variants;
  std::vector<std::vector<std::size_t>> positions;  // per variant, ascending
  double rate = 0.0;
  PerturbMethod method = PerturbMethod::Sample;
  std::uint64_t seed = 0;

  std::size_t k() const { return variants.size(); }
};

// Fills masked body positions of a request.
class SpanReplacer {
 public:
  virtual ~SpanReplacer() = default;
  // Returns `body` with every index in `masked` (ascending) refilled; other
  // positions must be returned unchanged.
  virtual std::vector<TokenId> fill(std::span<const TokenId> prefix, std::span<const TokenId> body,
                                    std::span<const std::size_t> masked, std::uint64_t seed) const = 0;
  // 0 when unknown.
  virtual std::size_t vocab_size() const { return 0; }
};

// Fills each masked position left to right with a draw from the backend's
// next-token distribution given everything before it.
class BackendReplacer final : public SpanReplacer {
 public:
  explicit BackendReplacer(const Backend& backend);

  std::vector<TokenId> fill(std::span<const TokenId> prefix, std::span<const TokenId> body,
                            std::span<const std::size_t> masked, std::uint64_t seed) const override;
  std::size_t vocab_size() const override;

 private:
  const Backend& backend_;
};

// ceil(rate * n), with rate in (0, 1].
std::size_t replacement_count(std::size_t n_scored, double rate);

// Distinct indices in [0, n_scored), uniform without replacement, ascending.
std::vector<std::size_t> select_positions(std::size_t n_scored, double rate, std::uint64_t seed);

// One shared position set; every replacement at body index j is drawn from
// the backend conditioned on the original prefix + body[0, j).
PerturbationSet sample_perturbations(const ScoringRequest& original, double rate, std::size_t k,
                                     const Backend& backend, std::uint64_t seed);

// Same draws as above, taken from `stream` (the original request's scored
// positions) instead of asking a backend for each conditional. Identical to
// the backend form whenever the backend's sample() is the default one and
// its next_distribution() reproduces the stream.
PerturbationSet sample_perturbations(const ScoringRequest& original, const DistributionStream& stream,
                                     double rate, std::size_t k, std::uint64_t seed);

// Positions re-drawn per variant, then filled by `replacer`.
PerturbationSet mask_perturbations(const ScoringRequest& original, double rate, std::size_t k,
                                   const SpanReplacer& replacer, std::uint64_t seed);

}  // namespace veridict
