#include "veridict/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>

namespace veridict {

namespace {

void require_full(const DistributionStream& stream, DetectorId id) {
  if (!stream.full()) {
    fail(ErrorKind::CapabilityError,
         std::string(to_string(id)) + " needs full-vocabulary distributions, stream is top-k");
  }
}

void require_nonempty(const DistributionStream& stream) {
  if (stream.size() == 0) fail(ErrorKind::InputTooShort, "no scored positions");
}

void check_variants(const PerturbationSet& set, std::size_t min_k) {
  if (set.k() < min_k) {
    fail(ErrorKind::ConfigError, "need at least " + std::to_string(min_k) + " perturbations, got " +
                                     std::to_string(set.k()));
  }
  for (const auto& v : set.variants) {
    if (v.size() != set.original.body.size()) {
      fail(ErrorKind::LengthMismatch, "perturbed variant length differs from the original");
    }
  }
}

double clamp_denominator(double value, double floor) { return std::max(value, floor); }

// Per-position ln(rank) lookups. A few distinct tokens are ranked by counting;
// past that the position gets a full table.
class LogRankCache {
 public:
  explicit LogRankCache(const DistributionStream& stream) : stream_(stream), slots_(stream.size()) {}

  double operator()(std::size_t index, TokenId token) {
    auto& slot = slots_[index];
    if (!slot.table.empty()) return slot.table[token];
    for (const auto& [t, v] : slot.memo) {
      if (t == token) return v;
    }
    if (slot.memo.size() < kMemoLimit) {
      const double v = std::log(static_cast<double>(token_rank(stream_[index], token)));
      slot.memo.emplace_back(token, v);
      return v;
    }
    const auto ranks = rank_table(stream_[index]);
    slot.table.resize(ranks.size());
    for (std::size_t t = 0; t < ranks.size(); ++t) slot.table[t] = std::log(static_cast<double>(ranks[t]));
    slot.memo.clear();
    return slot.table[token];
  }

 private:
  static constexpr std::size_t kMemoLimit = 16;
  struct Slot {
    std::vector<std::pair<TokenId, double>> memo;
    std::vector<double> table;
  };
  const DistributionStream& stream_;
  std::vector<Slot> slots_;
};

}  // namespace

void validate(const DetectorConfig& cfg) {
  if (cfg.k < 1) fail(ErrorKind::ConfigError, "k must be at least 1");
  if (!(cfg.rate > 0.0 && cfg.rate <= 1.0)) fail(ErrorKind::ConfigError, "rate must lie in (0, 1]");
  if (!(cfg.sigma_floor > 0.0) || !(cfg.epsilon_logrank > 0.0)) {
    fail(ErrorKind::ConfigError, "floors must be positive");
  }
}

DetectorNeeds needs(DetectorId id) {
  switch (id) {
    case DetectorId::LogLikelihood: return {};
    case DetectorId::Entropy:
    case DetectorId::Rank:
    case DetectorId::LogRank:
    case DetectorId::Lrr: return {.full_distribution = true};
    case DetectorId::DetectGpt: return {.sampling = true, .rescoring = true};
    case DetectorId::FastDetectGpt: return {.sampling = true};
    case DetectorId::Npr: return {.full_distribution = true, .sampling = true, .rescoring = true};
    case DetectorId::FastNpr: return {.full_distribution = true, .sampling = true};
    case DetectorId::Binoculars: return {.full_distribution = true, .second_model = true};
  }
  return {};
}

std::span<const TokenId> aligned_targets(const DistributionStream& stream, std::span<const TokenId> body) {
  if (stream.size() == body.size()) return body;
  if (stream.size() + 1 == body.size()) return body.subspan(1);
  fail(ErrorKind::LengthMismatch, "stream of " + std::to_string(stream.size()) +
                                      " positions does not align with a body of " +
                                      std::to_string(body.size()) + " tokens");
}

double token_logprob(const Distribution& dist, TokenId token, bool strict) {
  if (auto lp = dist.logprob(token)) return floored_logprob(*lp);
  if (strict) {
    fail(ErrorKind::TruncationError, "token " + std::to_string(token) + " missing from top-k list");
  }
  const std::size_t listed = dist.entries().size();
  double p = dist.rest_mass();
  if (dist.vocab_size() > listed) p /= static_cast<double>(dist.vocab_size() - listed);
  return floored_log(p);
}

std::size_t token_rank(const Distribution& dist, TokenId token) {
  const auto lps = dist.logprobs();
  if (token >= lps.size()) fail(ErrorKind::VocabMismatch, "token id outside vocabulary");
  const double own = lps[token];
  std::size_t rank = 1;
  for (std::size_t j = 0; j < lps.size(); ++j) {
    if (lps[j] > own || (lps[j] == own && j < token)) ++rank;
  }
  return rank;
}

std::vector<std::uint32_t> rank_table(const Distribution& dist) {
  const auto lps = dist.logprobs();
  std::vector<std::pair<double, std::uint32_t>> order(lps.size());
  for (std::size_t i = 0; i < lps.size(); ++i) order[i] = {-lps[i], static_cast<std::uint32_t>(i)};
  std::sort(order.begin(), order.end());
  std::vector<std::uint32_t> ranks(lps.size());
  for (std::size_t i = 0; i < order.size(); ++i) ranks[order[i].second] = static_cast<std::uint32_t>(i + 1);
  return ranks;
}

double entropy(const Distribution& dist) {
  double h = 0.0;
  for (double lp : dist.logprobs()) {
    if (std::isinf(lp)) continue;  // 0 * log 0
    h -= std::exp(lp) * lp;
  }
  return h;
}

double sum_log_likelihood(const DistributionStream& stream, std::span<const TokenId> targets, bool strict) {
  double sum = 0.0;
  for (std::size_t i = 0; i < stream.size(); ++i) sum += token_logprob(stream[i], targets[i], strict);
  return sum;
}

double mean_log_rank(const DistributionStream& stream, std::span<const TokenId> targets) {
  require_nonempty(stream);
  double sum = 0.0;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    sum += std::log(static_cast<double>(token_rank(stream[i], targets[i])));
  }
  return sum / static_cast<double>(stream.size());
}

double perturbation_discrepancy(double original, std::span<const double> variants, double sigma_floor) {
  if (variants.size() < 2) fail(ErrorKind::ConfigError, "the sample deviation needs k >= 2");
  // Offsets from the original, so variants equal to it give exactly 0.
  const double k = static_cast<double>(variants.size());
  double offset_sum = 0.0;
  for (double v : variants) offset_sum += v - original;
  const double mean_offset = offset_sum / k;
  double ss = 0.0;
  for (double v : variants) ss += (v - original - mean_offset) * (v - original - mean_offset);
  const double sigma = std::sqrt(ss / (k - 1.0));
  return -mean_offset / clamp_denominator(sigma, sigma_floor);
}

Score log_likelihood(const DistributionStream& stream, std::span<const TokenId> body, const DetectorConfig& cfg) {
  require_nonempty(stream);
  const auto targets = aligned_targets(stream, body);
  return Score(DetectorId::LogLikelihood,
               sum_log_likelihood(stream, targets, cfg.strict_topk) / static_cast<double>(stream.size()));
}

Score entropy_score(const DistributionStream& stream) {
  require_full(stream, DetectorId::Entropy);
  require_nonempty(stream);
  double sum = 0.0;
  for (const auto& d : stream.positions()) sum += entropy(d);
  const double raw = sum / static_cast<double>(stream.size());
  return Score(DetectorId::Entropy, raw, -raw);
}

Score rank_score(const DistributionStream& stream, std::span<const TokenId> body) {
  require_full(stream, DetectorId::Rank);
  require_nonempty(stream);
  const auto targets = aligned_targets(stream, body);
  double sum = 0.0;
  for (std::size_t i = 0; i < stream.size(); ++i) sum += static_cast<double>(token_rank(stream[i], targets[i]));
  const double mean = sum / static_cast<double>(stream.size());
  return Score(DetectorId::Rank, mean, -mean);
}

Score log_rank_score(const DistributionStream& stream, std::span<const TokenId> body) {
  require_full(stream, DetectorId::LogRank);
  const auto targets = aligned_targets(stream, body);
  const double mean = mean_log_rank(stream, targets);
  return Score(DetectorId::LogRank, mean, -mean);
}

Score lrr_score(const DistributionStream& stream, std::span<const TokenId> body, const DetectorConfig& cfg) {
  require_full(stream, DetectorId::Lrr);
  require_nonempty(stream);
  const auto targets = aligned_targets(stream, body);
  double ll = 0.0;
  double lr = 0.0;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    ll += token_logprob(stream[i], targets[i]);
    lr += std::log(static_cast<double>(token_rank(stream[i], targets[i])));
  }
  return Score(DetectorId::Lrr, -ll / clamp_denominator(lr, cfg.epsilon_logrank));
}

Score detectgpt_score(const DistributionStream& original, const PerturbationSet& perturbed,
                      const Backend& backend, const DetectorConfig& cfg) {
  if (perturbed.method != PerturbMethod::Mask) {
    fail(ErrorKind::ConfigError, "detectgpt expects mask-and-fill perturbations");
  }
  check_variants(perturbed, 2);
  const auto targets = scored_tokens(perturbed.original);
  if (targets.size() != original.size()) fail(ErrorKind::LengthMismatch, "stream does not match request");
  const double base = sum_log_likelihood(original, targets, cfg.strict_topk);
  std::vector<double> lls;
  lls.reserve(perturbed.k());
  for (const auto& variant : perturbed.variants) {
    const ScoringRequest req{perturbed.original.prefix, variant};
    const auto stream = backend.score(req);
    lls.push_back(sum_log_likelihood(stream, scored_tokens(req), cfg.strict_topk));
  }
  return Score(DetectorId::DetectGpt, perturbation_discrepancy(base, lls, cfg.sigma_floor));
}

Score npr_score(const DistributionStream& original, const PerturbationSet& perturbed, const Backend& backend,
                const DetectorConfig& cfg) {
  if (perturbed.method != PerturbMethod::Mask) {
    fail(ErrorKind::ConfigError, "npr expects mask-and-fill perturbations");
  }
  require_full(original, DetectorId::Npr);
  check_variants(perturbed, 1);
  const auto targets = scored_tokens(perturbed.original);
  if (targets.size() != original.size()) fail(ErrorKind::LengthMismatch, "stream does not match request");
  const double base = mean_log_rank(original, targets);
  double offset_sum = 0.0;
  for (const auto& variant : perturbed.variants) {
    const ScoringRequest req{perturbed.original.prefix, variant};
    const auto stream = backend.score(req);
    require_full(stream, DetectorId::Npr);
    offset_sum += mean_log_rank(stream, scored_tokens(req)) - base;
  }
  const double numerator = base + offset_sum / static_cast<double>(perturbed.k());
  return Score(DetectorId::Npr, numerator / clamp_denominator(base, cfg.epsilon_logrank));
}

Score fast_detectgpt_score(const DistributionStream& original, const PerturbationSet& perturbed,
                           const DetectorConfig& cfg) {
  check_variants(perturbed, 2);
  const auto& req = perturbed.original;
  const auto targets = scored_tokens(req);
  if (targets.size() != original.size()) fail(ErrorKind::LengthMismatch, "stream does not match request");
  const double base = sum_log_likelihood(original, targets, cfg.strict_topk);
  const std::size_t offset = body_index(req, 0);
  std::vector<double> lls;
  lls.reserve(perturbed.k());
  for (const auto& variant : perturbed.variants) {
    double ll = base;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const TokenId t = variant[i + offset];
      if (t == targets[i]) continue;
      ll += token_logprob(original[i], t, cfg.strict_topk) - token_logprob(original[i], targets[i], cfg.strict_topk);
    }
    lls.push_back(ll);
  }
  return Score(DetectorId::FastDetectGpt, perturbation_discrepancy(base, lls, cfg.sigma_floor));
}

Score fast_npr_score(const DistributionStream& original, const PerturbationSet& perturbed,
                     const DetectorConfig& cfg) {
  require_full(original, DetectorId::FastNpr);
  check_variants(perturbed, 1);
  const auto& req = perturbed.original;
  const auto targets = scored_tokens(req);
  if (targets.size() != original.size()) fail(ErrorKind::LengthMismatch, "stream does not match request");
  const std::size_t offset = body_index(req, 0);
  const double n = static_cast<double>(targets.size());
  LogRankCache log_rank(original);
  double base_sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) base_sum += log_rank(i, targets[i]);
  const double base = base_sum / n;
  double offset_total = 0.0;
  for (const auto& variant : perturbed.variants) {
    double sum = base_sum;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const TokenId t = variant[i + offset];
      if (t == targets[i]) continue;
      sum += log_rank(i, t) - log_rank(i, targets[i]);
    }
    offset_total += sum / n - base;
  }
  const double numerator = base + offset_total / static_cast<double>(perturbed.k());
  return Score(DetectorId::FastNpr, numerator / clamp_denominator(base, cfg.epsilon_logrank));
}

Score fast_detectgpt_score(const DistributionStream& original, const ScoringRequest& req,
                           const Backend& backend, const DetectorConfig& cfg, std::uint64_t seed) {
  if (!backend.capabilities().can_sample) {
    fail(ErrorKind::CapabilityError, "fast_detectgpt on " + backend.describe() + ": detector needs a backend that can sample");
  }
  return fast_detectgpt_score(original, sample_perturbations(req, original, cfg.rate, cfg.k, seed), cfg);
}

Score fast_npr_score(const DistributionStream& original, const ScoringRequest& req, const Backend& backend,
                     const DetectorConfig& cfg, std::uint64_t seed) {
  require_full(original, DetectorId::FastNpr);
  if (!backend.capabilities().can_sample) {
    fail(ErrorKind::CapabilityError, "fast_npr on " + backend.describe() + ": detector needs a backend that can sample");
  }
  return fast_npr_score(original, sample_perturbations(req, original, cfg.rate, cfg.k, seed), cfg);
}

Score binoculars_score(const DistributionStream& m1, const DistributionStream& m2, std::span<const TokenId> body,
                       const DetectorConfig& cfg) {
  require_full(m1, DetectorId::Binoculars);
  require_full(m2, DetectorId::Binoculars);
  require_nonempty(m1);
  if (m1.vocab_size() != m2.vocab_size()) {
    fail(ErrorKind::VocabMismatch, "binoculars models must share a vocabulary");
  }
  if (m1.size() != m2.size()) fail(ErrorKind::LengthMismatch, "binoculars streams differ in length");
  const auto targets = aligned_targets(m1, body);
  double log_ppl = 0.0;
  double x_ppl = 0.0;
  for (std::size_t i = 0; i < m1.size(); ++i) {
    log_ppl -= token_logprob(m1[i], targets[i]);
    const auto p1 = m1[i].logprobs();
    const auto p2 = m2[i].logprobs();
    for (std::size_t j = 0; j < p1.size(); ++j) {
      if (std::isinf(p1[j])) continue;
      x_ppl -= std::exp(p1[j]) * floored_logprob(p2[j]);
    }
  }
  const double n = static_cast<double>(m1.size());
  const double raw = (log_ppl / n) / clamp_denominator(x_ppl / n, cfg.epsilon_logrank);
  return Score(DetectorId::Binoculars, raw, -raw);
}

}  // namespace veridict
