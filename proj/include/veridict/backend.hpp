#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veridict/core.hpp"

namespace veridict {

struct BackendCapabilities {
  bool full_distribution = false;
  std::optional<std::size_t> top_k;
  bool can_sample = false;
  std::size_t vocab_size = 0;  // 0 when the backend cannot tell
};

// A language model as seen by the detectors. Implementations are immutable
// after construction, and every method may be called concurrently.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual BackendCapabilities capabilities() const = 0;
  virtual std::string describe() const = 0;

  // Text to token ids in this backend's own tokenization.
  virtual std::vector<TokenId> encode(std::string_view text) const = 0;
  virtual std::string decode(std::span<const TokenId> tokens) const;

  // One distribution per scored position of `req`, each conditioned on all
  // preceding prefix + body tokens.
  virtual DistributionStream score(const ScoringRequest& req) const = 0;

  // Next-token distribution after `context`.
  virtual Distribution next_distribution(std::span<const TokenId> context) const;

  // Token that ends a generated sequence, if the model has one.
  virtual std::optional<TokenId> end_token() const { return std::nullopt; }

  // n i.i.d. draws from next_distribution(context); deterministic per seed.
  virtual std::vector<TokenId> sample(std::span<const TokenId> context, std::size_t n,
                                      std::uint64_t seed) const;
};

// Whitespace-separated integer ids, the text convention of backends that do
// not own a tokenizer.
std::vector<TokenId> parse_token_ids(std::string_view text);
std::string format_token_ids(std::span<const TokenId> tokens);

}  // namespace veridict
