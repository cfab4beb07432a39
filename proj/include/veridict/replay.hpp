#pragma once

#include <map>
#include <string>
#include <vector>

#include "veridict/backend.hpp"
#include "veridict/stream_io.hpp"

namespace veridict {

// Serves previously exported distribution streams. It has no generative
// access; text is resolved through the "text"/"prompt" header fields when
// present and otherwise read as pre-tokenized ids.
class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(StreamFile file, std::string origin = "memory");
  static ReplayBackend open(const std::string& path);

  BackendCapabilities capabilities() const override;
  std::string describe() const override;
  std::vector<TokenId> encode(std::string_view text) const override;
  DistributionStream score(const ScoringRequest& req) const override;

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::vector<StreamRecord> records_;
  std::vector<std::string> warnings_;
  std::map<std::string, std::vector<TokenId>, std::less<>> texts_;
  std::string origin_;
  std::size_t vocab_size_ = 0;
  StreamKind kind_ = StreamKind::Full;
  std::size_t top_k_ = 0;
};

}  // namespace veridict
