#include "veridict/replay.hpp"

namespace veridict {

ReplayBackend::ReplayBackend(StreamFile file, std::string origin)
    : records_(std::move(file.records)), warnings_(std::move(file.warnings)), origin_(std::move(origin)) {
  if (records_.empty()) fail(ErrorKind::EmptyCorpus, "stream file '" + origin_ + "' holds no streams");
  const auto& first = records_.front().stream;
  kind_ = first.kind();
  top_k_ = first.top_k();
  for (const auto& r : records_) {
    if (r.stream.kind() != kind_) fail(ErrorKind::ConfigError, "stream file mixes full and top-k streams");
    if (r.stream.size() == 0) continue;
    if (vocab_size_ == 0) vocab_size_ = r.stream.vocab_size();
    if (r.stream.vocab_size() != vocab_size_) fail(ErrorKind::VocabMismatch, "streams disagree on C");
  }
  for (const auto& r : records_) {
    if (r.text && r.tokens) texts_.emplace(*r.text, *r.tokens);
    if (r.prompt && !r.prefix_tokens.empty()) texts_.emplace(*r.prompt, r.prefix_tokens);
  }
}

ReplayBackend ReplayBackend::open(const std::string& path) { return ReplayBackend(read_stream_file(path), path); }

BackendCapabilities ReplayBackend::capabilities() const {
  BackendCapabilities caps;
  caps.full_distribution = kind_ == StreamKind::Full;
  if (kind_ == StreamKind::TopK) caps.top_k = top_k_;
  caps.can_sample = false;
  caps.vocab_size = vocab_size_;
  return caps;
}

std::string ReplayBackend::describe() const {
  return "replay(" + origin_ + ",streams=" + std::to_string(records_.size()) + ")";
}

std::vector<TokenId> ReplayBackend::encode(std::string_view text) const {
  if (auto it = texts_.find(text); it != texts_.end()) return it->second;
  auto ids = parse_token_ids(text);
  validate_tokens(ids, vocab_size_);
  return ids;
}

DistributionStream ReplayBackend::score(const ScoringRequest& req) const {
  validate_tokens(req.prefix, vocab_size_);
  validate_tokens(req.body, vocab_size_);
  const std::size_t n = scored_count(req);
  for (const auto& r : records_) {
    if (r.tokens && *r.tokens == req.body && r.prefix_tokens == req.prefix) return r.stream;
  }
  if (records_.size() == 1 && !records_.front().tokens) {
    const auto& only = records_.front();
    if (only.stream.size() != n) {
      fail(ErrorKind::LengthMismatch, "stored stream has " + std::to_string(only.stream.size()) +
                                          " positions, request scores " + std::to_string(n));
    }
    return only.stream;
  }
  fail(ErrorKind::LengthMismatch, "no stored stream matches the requested tokens in " + origin_);
}

}  // namespace veridict
