#include "veridict/remote.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace veridict {

using nlohmann::json;

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

ErrorKind kind_from_name(std::string_view name) {
  for (int k = 0; k <= static_cast<int>(ErrorKind::IoError); ++k) {
    if (to_string(static_cast<ErrorKind>(k)) == name) return static_cast<ErrorKind>(k);
  }
  return ErrorKind::BackendUnavailable;
}

json parse_json(std::string_view body, const char* what) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

RemoteConfig RemoteConfig::from_env() {
  RemoteConfig c;
  if (auto url = env("VERIDICT_BACKEND_URL")) c.url = *url;
  if (auto t = env("VERIDICT_BACKEND_TIMEOUT_MS")) c.timeout_ms = std::stoi(*t);
  if (auto k = env("VERIDICT_BACKEND_TOP_K")) c.top_k = std::stoul(*k);
  return c;
}

RemoteConfig RemoteConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open backend config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, "backend config: " + std::string(e.what()));
  }
  RemoteConfig c = from_env();
  c.url = j.value("url", c.url);
  c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
  c.top_k = j.value("top_k", c.top_k);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.attempts = j.value("attempts", c.attempts);
  c.backoff_ms = j.value("backoff_ms", c.backoff_ms);
  return c;
}

namespace protocol {

std::string encode_request(const ScoringRequest& req, std::size_t top_k) {
  json j;
  j["prefix_tokens"] = req.prefix;
  j["body_tokens"] = req.body;
  j["top_k"] = top_k;
  return j.dump();
}

ScoringRequest decode_request(std::string_view body, std::size_t* top_k) {
  const json j = parse_json(body, "request");
  try {
    ScoringRequest req{j.at("prefix_tokens").get<std::vector<TokenId>>(),
                       j.at("body_tokens").get<std::vector<TokenId>>()};
    if (top_k) *top_k = j.at("top_k").get<std::size_t>();
    return req;
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, std::string("bad request: ") + e.what());
  }
}

Distribution truncate_top_k(const Distribution& dist, std::size_t k) {
  if (!dist.is_dense()) {
    if (dist.entries().size() <= k) return dist;
    std::vector<TokenProb> kept(dist.entries().begin(), dist.entries().begin() + static_cast<std::ptrdiff_t>(k));
    double rest = dist.rest_mass();
    for (std::size_t i = k; i < dist.entries().size(); ++i) rest += std::exp(dist.entries()[i].logprob);
    return Distribution::sparse(std::move(kept), std::min(rest, 1.0), dist.vocab_size());
  }
  const auto lps = dist.logprobs();
  std::vector<TokenProb> all;
  all.reserve(lps.size());
  for (std::size_t t = 0; t < lps.size(); ++t) all.push_back({static_cast<TokenId>(t), lps[t]});
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    [](const TokenProb& a, const TokenProb& b) {
                      return a.logprob != b.logprob ? a.logprob > b.logprob : a.id < b.id;
                    });
  all.resize(keep);
  double rest = 0.0;
  for (std::size_t t = 0; t < lps.size(); ++t) rest += std::exp(lps[t]);
  for (const auto& e : all) rest -= std::exp(e.logprob);
  return Distribution::sparse(std::move(all), std::clamp(rest, 0.0, 1.0), dist.vocab_size());
}

std::string encode_response(const DistributionStream& stream) {
  json j;
  auto positions = json::array();
  for (const auto& d : stream.positions()) {
    auto entries = json::array();
    for (const auto& e : d.entries()) entries.push_back(json::array({e.id, floored_logprob(e.logprob)}));
    positions.push_back({{"entries", std::move(entries)}, {"rest_mass", d.rest_mass()}});
  }
  j["positions"] = std::move(positions);
  if (stream.vocab_size()) j["vocab_size"] = stream.vocab_size();
  return j.dump();
}

DistributionStream decode_response(std::string_view body, std::size_t expected_positions,
                                   std::size_t vocab_size, std::size_t top_k) {
  const json j = parse_json(body, "response");
  try {
    if (j.contains("vocab_size") && vocab_size == 0) vocab_size = j.at("vocab_size").get<std::size_t>();
    const auto& positions = j.at("positions");
    if (positions.size() != expected_positions) {
      fail(ErrorKind::LengthMismatch, "server returned " + std::to_string(positions.size()) +
                                          " positions, expected " + std::to_string(expected_positions));
    }
    std::vector<Distribution> out;
    out.reserve(positions.size());
    for (const auto& p : positions) {
      std::vector<TokenProb> entries;
      for (const auto& e : p.at("entries")) {
        const double lp = e.at(1).get<double>();
        if (!std::isfinite(lp)) fail(ErrorKind::ParseError, "non-finite logprob in response");
        entries.push_back({e.at(0).get<TokenId>(), lp});
      }
      if (entries.size() > top_k) fail(ErrorKind::ParseError, "response lists more than top_k entries");
      out.push_back(Distribution::sparse(std::move(entries), p.at("rest_mass").get<double>(), vocab_size));
    }
    return DistributionStream(StreamKind::TopK, std::move(out), top_k);
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, std::string("bad response: ") + e.what());
  }
}

std::string encode_error(const Error& error) {
  return json{{"error", std::string(to_string(error.kind()))}, {"message", error.what()}}.dump();
}

std::string handle(const Backend& backend, std::string_view request_body) {
  std::size_t top_k = 0;
  const auto req = decode_request(request_body, &top_k);
  if (top_k == 0) fail(ErrorKind::ConfigError, "top_k must be positive");
  const auto stream = backend.score(req);
  std::vector<Distribution> truncated;
  truncated.reserve(stream.size());
  for (const auto& d : stream.positions()) truncated.push_back(truncate_top_k(d, top_k));
  return encode_response(DistributionStream(StreamKind::TopK, std::move(truncated), top_k));
}

}  // namespace protocol

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  if (config_.url.empty()) {
    fail(ErrorKind::ConfigError, "remote backend needs a URL (spec or VERIDICT_BACKEND_URL)");
  }
  if (config_.top_k == 0) fail(ErrorKind::ConfigError, "top_k must be positive");
  if (config_.attempts < 1) fail(ErrorKind::ConfigError, "attempts must be positive");
  const auto scheme = config_.url.find("://");
  if (scheme == std::string::npos || config_.url.substr(0, scheme) != "http") {
    fail(ErrorKind::ConfigError, "remote URL must be http://host[:port][/path]: " + config_.url);
  }
  const auto slash = config_.url.find('/', scheme + 3);
  host_ = config_.url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : config_.url.substr(slash);
}

BackendCapabilities RemoteBackend::capabilities() const {
  return {.full_distribution = false, .top_k = config_.top_k, .can_sample = false,
          .vocab_size = config_.vocab_size};
}

std::string RemoteBackend::describe() const {
  return "remote(" + config_.url + ",top_k=" + std::to_string(config_.top_k) + ")";
}

std::vector<TokenId> RemoteBackend::encode(std::string_view text) const {
  auto ids = parse_token_ids(text);
  validate_tokens(ids, config_.vocab_size);
  return ids;
}

DistributionStream RemoteBackend::score(const ScoringRequest& req) const {
  validate_tokens(req.prefix, config_.vocab_size);
  validate_tokens(req.body, config_.vocab_size);
  const std::size_t expected = scored_count(req);
  const std::string body = protocol::encode_request(req, config_.top_k);
  std::string last_problem;
  for (int attempt = 0; attempt < config_.attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms << (attempt - 1)));
    }
    // A client per call keeps concurrent score() calls independent.
    httplib::Client client(host_);
    const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(path_, body, "application/json");
    if (!res) {
      last_problem = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_problem = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      ErrorKind kind = ErrorKind::BackendUnavailable;
      std::string message = "HTTP " + std::to_string(res->status);
      try {
        const auto j = json::parse(res->body);
        kind = kind_from_name(j.value("error", std::string()));
        message = j.value("message", message);
      } catch (const json::exception&) {
      }
      if (kind == ErrorKind::BackendUnavailable) kind = ErrorKind::ConfigError;
      fail(kind, "remote backend rejected request: " + message);
    }
    return protocol::decode_response(res->body, expected, config_.vocab_size, config_.top_k);
  }
  fail(ErrorKind::BackendUnavailable, config_.url + " failed after " + std::to_string(config_.attempts) +
                                          " attempts: " + last_problem);
}

}  // namespace veridict
