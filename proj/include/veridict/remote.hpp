#pragma once

// Network scoring protocol.
//
//   request : {"prefix_tokens":[int], "body_tokens":[int], "top_k":int}
//   response: {"positions":[{"entries":[[id,logprob],...], "rest_mass":r}],
//              "vocab_size":C (optional)}
//   error   : non-2xx status with {"error":"<ErrorKind>", "message":"..."}
//
// One response position per scored body position.

#include <string>
#include <string_view>

#include "veridict/backend.hpp"

namespace veridict {

struct RemoteConfig {
  std::string url;
  int timeout_ms = 30000;
  std::size_t top_k = 50;
  std::size_t vocab_size = 0;
  int attempts = 3;
  int backoff_ms = 200;

  // VERIDICT_BACKEND_URL, VERIDICT_BACKEND_TIMEOUT_MS, VERIDICT_BACKEND_TOP_K.
  static RemoteConfig from_env();
  // JSON object with any of: url, timeout_ms, top_k, vocab_size, attempts, backoff_ms.
  static RemoteConfig from_file(const std::string& path);
};

namespace protocol {

std::string encode_request(const ScoringRequest& req, std::size_t top_k);
ScoringRequest decode_request(std::string_view body, std::size_t* top_k);
std::string encode_response(const DistributionStream& stream);
DistributionStream decode_response(std::string_view body, std::size_t expected_positions,
                                   std::size_t vocab_size, std::size_t top_k);
std::string encode_error(const Error& error);

// Keeps the k most probable tokens of a dense distribution.
Distribution truncate_top_k(const Distribution& dist, std::size_t k);

// Reference server-side handler: scores the request with `backend` and
// returns the response body. Throws Error on protocol violations.
std::string handle(const Backend& backend, std::string_view request_body);

}  // namespace protocol

class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig config);

  BackendCapabilities capabilities() const override;
  std::string describe() const override;
  std::vector<TokenId> encode(std::string_view text) const override;
  DistributionStream score(const ScoringRequest& req) const override;

 private:
  RemoteConfig config_;
  std::string host_;
  std::string path_;
};

}  // namespace veridict
