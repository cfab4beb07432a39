#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "veridict/backend.hpp"

namespace veridict {

// Whitespace-word vocabulary. Id 0 is reserved for unknown words and also
// marks the end of a training line.
class Vocabulary {
 public:
  static constexpr TokenId kUnknown = 0;
  static constexpr std::string_view kUnknownWord = "<unk>";

  // Words of all lines, sorted, after the reserved id.
  static Vocabulary build(std::span<const std::string> lines);

  std::size_t size() const { return words_.size(); }
  TokenId id(std::string_view word) const;
  const std::string& word(TokenId id) const;

  std::vector<TokenId> encode(std::string_view text) const;
  std::string decode(std::span<const TokenId> tokens) const;

 private:
  std::vector<std::string> words_;
  std::map<std::string, TokenId, std::less<>> ids_;
};

std::vector<std::string> split_words(std::string_view text);

// Add-alpha smoothed n-gram counts:
//   P(t | ctx) = (count(ctx, t) + alpha) / (count(ctx) + alpha * C)
// where ctx is the last min(|history|, order - 1) tokens of the history.
// count(ctx) counts every occurrence of ctx in the corpus; an occurrence that
// ends a line is counted as followed by the reserved id.
class NgramModel {
 public:
  static NgramModel train(std::span<const std::vector<TokenId>> corpus, std::size_t vocab_size,
                          int order, double alpha);

  int order() const { return order_; }
  double alpha() const { return alpha_; }
  std::size_t vocab_size() const { return vocab_size_; }

  std::uint64_t context_count(std::span<const TokenId> context) const;
  std::uint64_t count(std::span<const TokenId> context, TokenId token) const;
  double probability(std::span<const TokenId> history, TokenId token) const;
  // Dense conditional probabilities after `history`.
  std::vector<double> conditional(std::span<const TokenId> history) const;

 private:
  struct ContextStats {
    std::uint64_t total = 0;
    std::vector<std::pair<TokenId, std::uint64_t>> successors;  // ascending id
  };
  struct KeyHash {
    std::size_t operator()(const std::vector<TokenId>& key) const noexcept;
  };

  std::span<const TokenId> effective_context(std::span<const TokenId> history) const;
  const ContextStats* find(std::span<const TokenId> context) const;

  int order_ = 1;
  double alpha_ = 1.0;
  std::size_t vocab_size_ = 0;
  std::unordered_map<std::vector<TokenId>, ContextStats, KeyHash> table_;
};

struct NgramOptions {
  int order = 3;
  double alpha = 0.01;
  // Cache of the token types present anywhere in the context (reserved id
  // excluded), applied by rescaling the n-gram conditional:
  //   P(t | h) ~ P_ngram(t | h) * (P_cache(t | h) / P_unigram(t))^weight
  //   P_cache(t | h) = ([t in h] + prior * P_unigram(t)) / (D_h + prior)
  // with D_h the number of distinct types in h and P_unigram the model's
  // empty-context distribution. A long prompt thereby shifts the model beyond
  // the n-gram window without giving mass to continuations the n-gram model
  // rules out, and repeats do not feed back into their own boost. Weight 0
  // disables it.
  double cache_weight = 0.0;
  double cache_prior = 10.0;
};

class NgramBackend final : public Backend {
 public:
  NgramBackend(std::shared_ptr<const Vocabulary> vocab, NgramModel model, double cache_weight = 0.0,
               double cache_prior = 10.0);

  // Trains on whitespace-tokenized lines with a vocabulary built from them.
  static NgramBackend from_lines(std::span<const std::string> lines, const NgramOptions& options);
  static NgramBackend from_lines(std::shared_ptr<const Vocabulary> vocab,
                                 std::span<const std::string> lines, const NgramOptions& options);

  BackendCapabilities capabilities() const override;
  std::string describe() const override;
  std::vector<TokenId> encode(std::string_view text) const override;
  std::string decode(std::span<const TokenId> tokens) const override;
  DistributionStream score(const ScoringRequest& req) const override;
  Distribution next_distribution(std::span<const TokenId> context) const override;
  // The reserved id, which training records at the end of every line.
  std::optional<TokenId> end_token() const override;

  const NgramModel& model() const { return model_; }
  const Vocabulary& vocabulary() const { return *vocab_; }
  std::shared_ptr<const Vocabulary> shared_vocabulary() const { return vocab_; }
  double cache_weight() const { return cache_weight_; }
  double cache_prior() const { return cache_prior_; }

 private:
  Distribution distribution(std::span<const TokenId> history, std::span<const std::uint8_t> seen,
                            std::size_t distinct) const;

  std::shared_ptr<const Vocabulary> vocab_;
  NgramModel model_;
  double cache_weight_;
  double cache_prior_;
  std::vector<double> unigram_;
};

// Per-token probability 1/C everywhere.
class UniformBackend final : public Backend {
 public:
  explicit UniformBackend(std::size_t vocab_size);

  BackendCapabilities capabilities() const override;
  std::string describe() const override;
  std::vector<TokenId> encode(std::string_view text) const override;
  DistributionStream score(const ScoringRequest& req) const override;
  Distribution next_distribution(std::span<const TokenId> context) const override;

 private:
  std::size_t vocab_size_;
};

}  // namespace veridict
