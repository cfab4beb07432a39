#include "veridict/rng.hpp"

#include <cmath>
#include <limits>

namespace veridict {

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_string(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

AliasTable::AliasTable(const Distribution& dist) {
  std::vector<double> weights;
  if (dist.is_dense()) {
    const auto lps = dist.logprobs();
    for (std::size_t t = 0; t < lps.size(); ++t) {
      const double p = std::exp(lps[t]);
      if (p > 0.0) {
        tokens_.push_back(static_cast<TokenId>(t));
        weights.push_back(p);
      }
    }
  } else {
    // Unlisted tokens cannot be named, so the top-k list is renormalized.
    for (const auto& e : dist.entries()) {
      const double p = std::exp(e.logprob);
      if (p > 0.0) {
        tokens_.push_back(e.id);
        weights.push_back(p);
      }
    }
  }
  const std::size_t n = tokens_.size();
  if (n == 0) fail(ErrorKind::InvalidDistribution, "cannot sample from an empty support");

  double total = 0.0;
  for (double w : weights) total += w;
  threshold_.assign(n, 1.0);
  alias_.resize(n);
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    alias_[i] = static_cast<std::uint32_t>(i);
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const std::uint32_t s = small.back();
    small.pop_back();
    const std::uint32_t l = large.back();
    threshold_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // leftovers are 1 up to rounding
  for (auto i : small) threshold_[i] = 1.0;
  for (auto i : large) threshold_[i] = 1.0;
}

TokenId AliasTable::draw(Rng& rng) const {
  const auto column = static_cast<std::size_t>(rng.below(tokens_.size()));
  const double u = rng.uniform();
  return u < threshold_[column] ? tokens_[column] : tokens_[alias_[column]];
}

}  // namespace veridict
