#pragma once

// Domain types shared by every module: token sequences, next-token
// distributions, scoring requests and detector scores.
//
// Conventions:
//  * all logarithms are natural logs;
//  * probabilities are floored at kProbabilityFloor before any log is taken
//    by a detector;
//  * scores are oriented so that a higher value means "more likely AI".

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "veridict/error.hpp"

namespace veridict {

using TokenId = std::uint32_t;

inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kSumTolerance = 1e-6;

// ln(max(p, floor)).
double floored_log(double probability);
// max(logprob, ln floor); accepts -inf.
double floored_logprob(double logprob);

class TokenSeq {
 public:
  TokenSeq() = default;
  TokenSeq(std::vector<TokenId> tokens, std::size_t vocab_size);

  std::span<const TokenId> tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  std::size_t vocab_size() const { return vocab_size_; }
  TokenId operator[](std::size_t i) const { return tokens_[i]; }

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;

 private:
  std::vector<TokenId> tokens_;
  std::size_t vocab_size_ = 0;
};

struct TokenProb {
  TokenId id;
  double logprob;

  friend bool operator==(const TokenProb&, const TokenProb&) = default;
};

// A next-token distribution, either dense over the full vocabulary or a
// top-k list plus the probability mass of every unlisted token.
//
// Log-probabilities are the stored representation so that a serialized
// stream reloads bit-identically. Dense entries may be -inf (exact zero).
class Distribution {
 public:
  static Distribution dense(std::vector<double> logprobs);
  static Distribution from_probs(std::span<const double> probs);
  // Entries are reordered into canonical order: descending probability,
  // ties by ascending token id. vocab_size 0 means "unknown".
  static Distribution sparse(std::vector<TokenProb> entries, double rest_mass,
                             std::size_t vocab_size);

  bool is_dense() const { return dense_; }
  std::size_t vocab_size() const { return vocab_size_; }

  // Stored log-probability, or nullopt for a token missing from a top-k list.
  std::optional<double> logprob(TokenId id) const;
  // Probability of `id`; zero for tokens missing from a top-k list.
  double prob(TokenId id) const;

  std::span<const double> logprobs() const;       // dense only
  std::span<const TokenProb> entries() const;     // sparse only
  double rest_mass() const { return rest_mass_; }

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  Distribution() = default;

  bool dense_ = true;
  std::size_t vocab_size_ = 0;
  std::vector<double> logprobs_;
  std::vector<TokenProb> entries_;
  double rest_mass_ = 0.0;
};

enum class StreamKind { Full, TopK };

// Per-position next-token distributions of a scored region, in position order.
class DistributionStream {
 public:
  DistributionStream() = default;
  DistributionStream(StreamKind kind, std::vector<Distribution> per_position,
                     std::size_t top_k = 0);

  StreamKind kind() const { return kind_; }
  std::size_t top_k() const { return top_k_; }
  bool full() const { return kind_ == StreamKind::Full; }
  std::size_t size() const { return per_position_.size(); }
  const Distribution& operator[](std::size_t i) const { return per_position_[i]; }
  std::span<const Distribution> positions() const { return per_position_; }
  std::size_t vocab_size() const;

  friend bool operator==(const DistributionStream&, const DistributionStream&) = default;

 private:
  StreamKind kind_ = StreamKind::Full;
  std::size_t top_k_ = 0;
  std::vector<Distribution> per_position_;
};

// Likelihoods are conditioned on prefix + body; only body positions are
// scored. An empty prefix makes this a black-box request.
struct ScoringRequest {
  std::vector<TokenId> prefix;
  std::vector<TokenId> body;

  bool black_box() const { return prefix.empty(); }
  std::vector<TokenId> context() const;

  friend bool operator==(const ScoringRequest&, const ScoringRequest&) = default;
};

// 1-indexed positions within prefix + body whose conditionals are scored.
// The first token of an unconditioned context is never scored.
std::vector<std::size_t> scored_positions(const ScoringRequest& req);
std::size_t scored_count(const ScoringRequest& req);
// Body tokens at the scored positions, aligned with a stream of the request.
std::span<const TokenId> scored_tokens(const ScoringRequest& req);
// Index into req.body of the i-th scored position.
std::size_t body_index(const ScoringRequest& req, std::size_t scored_index);

void validate_tokens(std::span<const TokenId> tokens, std::size_t vocab_size);

enum class DetectorId {
  LogLikelihood,
  Entropy,
  Rank,
  LogRank,
  DetectGpt,
  FastDetectGpt,
  Lrr,
  Npr,
  FastNpr,
  Binoculars,
};

inline constexpr DetectorId kAllDetectors[] = {
    DetectorId::DetectGpt, DetectorId::FastDetectGpt, DetectorId::Lrr,
    DetectorId::Npr,       DetectorId::FastNpr,       DetectorId::Entropy,
    DetectorId::LogLikelihood, DetectorId::Rank,      DetectorId::LogRank,
    DetectorId::Binoculars,
};

std::string_view to_string(DetectorId id);
DetectorId parse_detector(std::string_view name);

// `raw` is the detector's statistic as usually defined; `value` is the
// oriented score (higher => AI). Both are always finite.
class Score {
 public:
  Score(DetectorId detector, double raw, double value);
  Score(DetectorId detector, double value) : Score(detector, value, value) {}

  DetectorId detector() const { return detector_; }
  double raw() const { return raw_; }
  double value() const { return value_; }

 private:
  DetectorId detector_;
  double raw_;
  double value_;
};

}  // namespace veridict
