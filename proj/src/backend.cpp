#include "veridict/backend.hpp"

#include <charconv>

#include "veridict/rng.hpp"

namespace veridict {

std::string Backend::decode(std::span<const TokenId> tokens) const {
  return format_token_ids(tokens);
}

Distribution Backend::next_distribution(std::span<const TokenId>) const {
  fail(ErrorKind::CapabilityError, describe() + " has no generative access");
}

std::vector<TokenId> Backend::sample(std::span<const TokenId> context, std::size_t n,
                                     std::uint64_t seed) const {
  if (!capabilities().can_sample) {
    fail(ErrorKind::CapabilityError, describe() + " cannot sample");
  }
  const AliasTable table(next_distribution(context));
  Rng rng(seed);
  std::vector<TokenId> out(n);
  for (auto& t : out) t = table.draw(rng);
  return out;
}

std::vector<TokenId> parse_token_ids(std::string_view text) {
  std::vector<TokenId> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' || text[i] == '\r')) ++i;
    if (i == text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !(text[j] == ' ' || text[j] == '\t' || text[j] == '\n' || text[j] == '\r')) ++j;
    TokenId value = 0;
    const auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + j, value);
    if (ec != std::errc() || ptr != text.data() + j) {
      fail(ErrorKind::VocabMismatch,
           "expected pre-tokenized integer ids, found '" + std::string(text.substr(i, j - i)) + "'");
    }
    out.push_back(value);
    i = j;
  }
  return out;
}

std::string format_token_ids(std::span<const TokenId> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(tokens[i]);
  }
  return out;
}

}  // namespace veridict
