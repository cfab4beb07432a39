#include "veridict/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "veridict/rng.hpp"

namespace veridict {

namespace {

constexpr std::uint64_t kPositionStream = 1;
constexpr std::uint64_t kDrawStream = 2;
constexpr std::uint64_t kVariantStream = 3;
constexpr std::uint64_t kFillStream = 4;

void check_rate(double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    fail(ErrorKind::ConfigError, "substitution rate must lie in (0, 1], got " + std::to_string(rate));
  }
}

void check_k(std::size_t k) {
  if (k == 0) fail(ErrorKind::ConfigError, "sample size k must be at least 1");
}

}  // namespace

std::size_t replacement_count(std::size_t n_scored, double rate) {
  check_rate(rate);
  // The slack absorbs products such as 0.3 * 10 = 3.0000000000000004.
  const double exact = rate * static_cast<double>(n_scored);
  auto count = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  return std::min(count, n_scored);
}

std::vector<std::size_t> select_positions(std::size_t n_scored, double rate, std::uint64_t seed) {
  const std::size_t m = replacement_count(n_scored, rate);
  std::vector<std::size_t> idx(n_scored);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < m; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n_scored - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

BackendReplacer::BackendReplacer(const Backend& backend) : backend_(backend) {}

std::size_t BackendReplacer::vocab_size() const { return backend_.capabilities().vocab_size; }

std::vector<TokenId> BackendReplacer::fill(std::span<const TokenId> prefix, std::span<const TokenId> body,
                                           std::span<const std::size_t> masked, std::uint64_t seed) const {
  std::vector<TokenId> context(prefix.begin(), prefix.end());
  context.insert(context.end(), body.begin(), body.end());
  for (std::size_t j : masked) {
    const std::size_t at = prefix.size() + j;
    try {
      context[at] = backend_.sample(std::span<const TokenId>(context).first(at), 1, mix_seed(seed, j)).front();
    } catch (const Error& e) {
      throw ReplacementError(j, e.what());
    }
  }
  return std::vector<TokenId>(context.begin() + static_cast<std::ptrdiff_t>(prefix.size()), context.end());
}

PerturbationSet sample_perturbations(const ScoringRequest& original, double rate, std::size_t k,
                                     const Backend& backend, std::uint64_t seed) {
  check_k(k);
  check_rate(rate);
  if (!backend.capabilities().can_sample) {
    fail(ErrorKind::CapabilityError, backend.describe() + " cannot sample replacements");
  }
  const std::size_t n = scored_count(original);
  auto chosen = select_positions(n, rate, mix_seed(seed, kPositionStream));
  for (auto& i : chosen) i = body_index(original, i);

  PerturbationSet set;
  set.original = original;
  set.rate = rate;
  set.method = PerturbMethod::Sample;
  set.seed = seed;
  set.variants.assign(k, original.body);
  set.positions.assign(k, chosen);

  const auto context = original.context();
  const std::uint64_t draw_seed = mix_seed(seed, kDrawStream);
  for (std::size_t j : chosen) {
    const std::size_t at = original.prefix.size() + j;
    const auto draws = backend.sample(std::span<const TokenId>(context).first(at), k, mix_seed(draw_seed, j));
    for (std::size_t v = 0; v < k; ++v) set.variants[v][j] = draws[v];
  }
  return set;
}

PerturbationSet sample_perturbations(const ScoringRequest& original, const DistributionStream& stream,
                                     double rate, std::size_t k, std::uint64_t seed) {
  check_k(k);
  check_rate(rate);
  const std::size_t n = scored_count(original);
  if (stream.size() != n) fail(ErrorKind::LengthMismatch, "stream does not match the request's scored positions");
  const auto chosen = select_positions(n, rate, mix_seed(seed, kPositionStream));

  PerturbationSet set;
  set.original = original;
  set.rate = rate;
  set.method = PerturbMethod::Sample;
  set.seed = seed;
  set.variants.assign(k, original.body);
  set.positions.assign(k, {});

  const std::uint64_t draw_seed = mix_seed(seed, kDrawStream);
  for (std::size_t i : chosen) {
    const std::size_t j = body_index(original, i);
    const AliasTable table(stream[i]);
    Rng rng(mix_seed(draw_seed, j));
    for (std::size_t v = 0; v < k; ++v) set.variants[v][j] = table.draw(rng);
    for (auto& p : set.positions) p.push_back(j);
  }
  return set;
}

PerturbationSet mask_perturbations(const ScoringRequest& original, double rate, std::size_t k,
                                   const SpanReplacer& replacer, std::uint64_t seed) {
  check_k(k);
  check_rate(rate);
  const std::size_t n = scored_count(original);

  PerturbationSet set;
  set.original = original;
  set.rate = rate;
  set.method = PerturbMethod::Mask;
  set.seed = seed;
  set.variants.reserve(k);
  set.positions.reserve(k);
  const std::size_t vocab = replacer.vocab_size();
  for (std::size_t v = 0; v < k; ++v) {
    const std::uint64_t vseed = mix_seed(mix_seed(seed, kVariantStream), v);
    auto masked = select_positions(n, rate, mix_seed(vseed, kPositionStream));
    for (auto& i : masked) i = body_index(original, i);
    auto filled = replacer.fill(original.prefix, original.body, masked, mix_seed(vseed, kFillStream));
    if (filled.size() != original.body.size()) {
      throw ReplacementError(masked.empty() ? 0 : masked.front(), "replacer changed the body length");
    }
    std::size_t next = 0;
    for (std::size_t j = 0; j < filled.size(); ++j) {
      const bool is_masked = next < masked.size() && masked[next] == j;
      if (is_masked) {
        ++next;
        if (vocab != 0 && filled[j] >= vocab) throw ReplacementError(j, "filled token outside vocabulary");
      } else if (filled[j] != original.body[j]) {
        throw ReplacementError(j, "replacer modified an unmasked position");
      }
    }
    set.variants.push_back(std::move(filled));
    set.positions.push_back(std::move(masked));
  }
  return set;
}

}  // namespace veridict
