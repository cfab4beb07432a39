#include "veridict/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace veridict {

namespace {

const double kLogFloor = std::log(kProbabilityFloor);

bool canonical_before(const TokenProb& a, const TokenProb& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return a.id < b.id;
}

}  // namespace

double floored_log(double probability) {
  return std::log(std::max(probability, kProbabilityFloor));
}

double floored_logprob(double logprob) { return std::max(logprob, kLogFloor); }

TokenSeq::TokenSeq(std::vector<TokenId> tokens, std::size_t vocab_size)
    : tokens_(std::move(tokens)), vocab_size_(vocab_size) {
  if (vocab_size_ == 0) fail(ErrorKind::ConfigError, "vocabulary size must be positive");
  validate_tokens(tokens_, vocab_size_);
}

void validate_tokens(std::span<const TokenId> tokens, std::size_t vocab_size) {
  if (vocab_size == 0) return;
  for (TokenId t : tokens) {
    if (t >= vocab_size) {
      fail(ErrorKind::VocabMismatch,
           "token id " + std::to_string(t) + " outside vocabulary of size " +
               std::to_string(vocab_size));
    }
  }
}

Distribution Distribution::dense(std::vector<double> logprobs) {
  if (logprobs.empty()) fail(ErrorKind::InvalidDistribution, "empty dense distribution");
  double sum = 0.0;
  for (double lp : logprobs) {
    if (std::isnan(lp) || lp > 0.0 || lp == std::numeric_limits<double>::infinity()) {
      fail(ErrorKind::InvalidDistribution, "log-probability out of range");
    }
    sum += std::exp(lp);
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    fail(ErrorKind::InvalidDistribution, "dense probabilities sum to " + std::to_string(sum));
  }
  Distribution d;
  d.dense_ = true;
  d.vocab_size_ = logprobs.size();
  d.logprobs_ = std::move(logprobs);
  return d;
}

Distribution Distribution::from_probs(std::span<const double> probs) {
  std::vector<double> lps(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0)) fail(ErrorKind::InvalidDistribution, "negative probability");
    lps[i] = std::log(probs[i]);
  }
  return dense(std::move(lps));
}

Distribution Distribution::sparse(std::vector<TokenProb> entries, double rest_mass,
                                  std::size_t vocab_size) {
  if (!(rest_mass >= 0.0) || rest_mass > 1.0 + kSumTolerance) {
    fail(ErrorKind::InvalidDistribution, "rest mass out of range");
  }
  double sum = rest_mass;
  for (const auto& e : entries) {
    if (std::isnan(e.logprob) || e.logprob > 0.0) {
      fail(ErrorKind::InvalidDistribution, "log-probability out of range");
    }
    sum += std::exp(e.logprob);
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    fail(ErrorKind::InvalidDistribution, "top-k mass plus rest sums to " + std::to_string(sum));
  }
  std::sort(entries.begin(), entries.end(), canonical_before);
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].id == entries[i - 1].id) {
      fail(ErrorKind::InvalidDistribution, "duplicate token id in top-k list");
    }
  }
  if (vocab_size != 0) {
    for (const auto& e : entries) {
      if (e.id >= vocab_size) fail(ErrorKind::VocabMismatch, "top-k token id outside vocabulary");
    }
    if (entries.size() > vocab_size) fail(ErrorKind::InvalidDistribution, "top-k longer than vocabulary");
  }
  Distribution d;
  d.dense_ = false;
  d.vocab_size_ = vocab_size;
  d.entries_ = std::move(entries);
  d.rest_mass_ = rest_mass;
  return d;
}

std::optional<double> Distribution::logprob(TokenId id) const {
  if (dense_) {
    if (id >= logprobs_.size()) fail(ErrorKind::VocabMismatch, "token id outside vocabulary");
    return logprobs_[id];
  }
  if (vocab_size_ != 0 && id >= vocab_size_) {
    fail(ErrorKind::VocabMismatch, "token id outside vocabulary");
  }
  for (const auto& e : entries_) {
    if (e.id == id) return e.logprob;
  }
  return std::nullopt;
}

double Distribution::prob(TokenId id) const {
  auto lp = logprob(id);
  return lp ? std::exp(*lp) : 0.0;
}

std::span<const double> Distribution::logprobs() const {
  if (!dense_) fail(ErrorKind::CapabilityError, "top-k distribution has no dense vector");
  return logprobs_;
}

std::span<const TokenProb> Distribution::entries() const {
  if (dense_) fail(ErrorKind::CapabilityError, "dense distribution has no top-k list");
  return entries_;
}

DistributionStream::DistributionStream(StreamKind kind, std::vector<Distribution> per_position,
                                       std::size_t top_k)
    : kind_(kind), top_k_(kind == StreamKind::TopK ? top_k : 0),
      per_position_(std::move(per_position)) {
  const bool want_dense = kind_ == StreamKind::Full;
  for (const auto& d : per_position_) {
    if (d.is_dense() != want_dense) {
      fail(ErrorKind::InvalidDistribution, "stream mixes dense and top-k positions");
    }
    if (!want_dense && top_k_ != 0 && d.entries().size() > top_k_) {
      fail(ErrorKind::InvalidDistribution, "position lists more entries than top_k");
    }
    if (d.vocab_size() != per_position_.front().vocab_size()) {
      fail(ErrorKind::VocabMismatch, "stream positions disagree on vocabulary size");
    }
  }
}

std::size_t DistributionStream::vocab_size() const {
  return per_position_.empty() ? 0 : per_position_.front().vocab_size();
}

std::vector<TokenId> ScoringRequest::context() const {
  std::vector<TokenId> all(prefix);
  all.insert(all.end(), body.begin(), body.end());
  return all;
}

std::size_t scored_count(const ScoringRequest& req) {
  if (req.prefix.empty()) {
    if (req.body.size() < 2) {
      fail(ErrorKind::InputTooShort,
           "an unconditioned body needs at least 2 tokens, got " + std::to_string(req.body.size()));
    }
    return req.body.size() - 1;
  }
  if (req.body.empty()) fail(ErrorKind::InputTooShort, "empty body");
  return req.body.size();
}

std::vector<std::size_t> scored_positions(const ScoringRequest& req) {
  const std::size_t n = scored_count(req);
  const std::size_t first = req.prefix.size() + (req.prefix.empty() ? 2 : 1);
  std::vector<std::size_t> out(n);
  std::iota(out.begin(), out.end(), first);
  return out;
}

std::span<const TokenId> scored_tokens(const ScoringRequest& req) {
  const std::size_t n = scored_count(req);
  return std::span<const TokenId>(req.body).last(n);
}

std::size_t body_index(const ScoringRequest& req, std::size_t scored_index) {
  return scored_index + (req.prefix.empty() ? 1 : 0);
}

std::string_view to_string(DetectorId id) {
  switch (id) {
    case DetectorId::LogLikelihood: return "log_likelihood";
    case DetectorId::Entropy: return "entropy";
    case DetectorId::Rank: return "rank";
    case DetectorId::LogRank: return "log_rank";
    case DetectorId::DetectGpt: return "detectgpt";
    case DetectorId::FastDetectGpt: return "fast_detectgpt";
    case DetectorId::Lrr: return "lrr";
    case DetectorId::Npr: return "npr";
    case DetectorId::FastNpr: return "fast_npr";
    case DetectorId::Binoculars: return "binoculars";
  }
  return "unknown";
}

DetectorId parse_detector(std::string_view name) {
  for (DetectorId id : kAllDetectors) {
    if (to_string(id) == name) return id;
  }
  fail(ErrorKind::ConfigError, "unknown detector '" + std::string(name) + "'");
}

Score::Score(DetectorId detector, double raw, double value)
    : detector_(detector), raw_(raw), value_(value) {
  if (!std::isfinite(raw) || !std::isfinite(value)) {
    fail(ErrorKind::NonFiniteScore, std::string(to_string(detector)) + " produced a non-finite score");
  }
}

}  // namespace veridict
