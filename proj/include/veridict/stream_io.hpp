#pragma once

// Line-delimited distribution-stream files. Each stream is a header record
//   {"version":1,"C":..,"kind":"full"|"top_k","k":..,"token_count":n, ...}
// followed by n position records
//   {"position":p,"entries":[[token_id,logprob],...],"rest_mass":r}
// Optional header fields: "tokens" (body ids), "prefix_tokens", "id",
// "text", "prompt". Several streams may follow one another in one file.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "veridict/core.hpp"

namespace veridict {

inline constexpr int kStreamFormatVersion = 1;

struct StreamRecord {
  DistributionStream stream;
  std::optional<std::vector<TokenId>> tokens;
  std::vector<TokenId> prefix_tokens;
  std::optional<std::string> id;
  std::optional<std::string> text;
  std::optional<std::string> prompt;
};

struct StreamFile {
  std::vector<StreamRecord> records;
  // Recoverable oddities such as unknown fields or non-canonical entry order.
  std::vector<std::string> warnings;
};

// Positions are numbered as scored_positions() would for the record's
// prefix/body when tokens are known, and 2, 3, ... otherwise.
void write_stream(std::ostream& out, const StreamRecord& record);
StreamFile read_streams(std::istream& in);
StreamFile read_stream_file(const std::string& path);

}  // namespace veridict
