#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "veridict/backend.hpp"
#include "veridict/error.hpp"
#include "veridict/ngram.hpp"

namespace vtest {

using veridict::ErrorKind;
using veridict::TokenId;

// Runs `f` and returns the kind of the veridict::Error it throws.
template <typename F>
std::optional<ErrorKind> error_kind(F&& f) {
  try {
    f();
  } catch (const veridict::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

#define EXPECT_ERROR(kind, stmt) EXPECT_EQ(vtest::error_kind([&] { stmt; }), veridict::ErrorKind::kind)

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::path(VERIDICT_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  f << content;
  return path.string();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Dense distribution from explicit probabilities.
inline veridict::Distribution probs(std::vector<double> p) { return veridict::Distribution::from_probs(p); }

// Every conditional is one-hot on `next(context)`.
class OneHotBackend final : public veridict::Backend {
 public:
  OneHotBackend(std::size_t vocab, std::function<TokenId(std::span<const TokenId>)> next)
      : vocab_(vocab), next_(std::move(next)) {}

  veridict::BackendCapabilities capabilities() const override { return {true, std::nullopt, true, vocab_}; }
  std::string describe() const override { return "one-hot"; }
  std::vector<TokenId> encode(std::string_view text) const override { return veridict::parse_token_ids(text); }

  veridict::Distribution next_distribution(std::span<const TokenId> context) const override {
    std::vector<double> p(vocab_, 0.0);
    p[next_(context)] = 1.0;
    return veridict::Distribution::from_probs(p);
  }

  veridict::DistributionStream score(const veridict::ScoringRequest& req) const override {
    std::vector<veridict::Distribution> out;
    const auto ctx = req.context();
    for (std::size_t pos : veridict::scored_positions(req)) {
      out.push_back(next_distribution(std::span(ctx).first(pos - 1)));
    }
    return {veridict::StreamKind::Full, std::move(out)};
  }

 private:
  std::size_t vocab_;
  std::function<TokenId(std::span<const TokenId>)> next_;
};

// Wraps a backend and records every context it is asked about.
class SpyBackend final : public veridict::Backend {
 public:
  explicit SpyBackend(std::shared_ptr<const veridict::Backend> inner) : inner_(std::move(inner)) {}

  veridict::BackendCapabilities capabilities() const override { return inner_->capabilities(); }
  std::string describe() const override { return "spy(" + inner_->describe() + ")"; }
  std::vector<TokenId> encode(std::string_view text) const override {
    std::lock_guard lock(mu_);
    encoded.emplace_back(text);
    return inner_->encode(text);
  }
  std::string decode(std::span<const TokenId> tokens) const override { return inner_->decode(tokens); }
  veridict::DistributionStream score(const veridict::ScoringRequest& req) const override {
    {
      std::lock_guard lock(mu_);
      requests.push_back(req);
    }
    return inner_->score(req);
  }
  veridict::Distribution next_distribution(std::span<const TokenId> context) const override {
    {
      std::lock_guard lock(mu_);
      contexts.emplace_back(context.begin(), context.end());
    }
    return inner_->next_distribution(context);
  }
  std::optional<TokenId> end_token() const override { return inner_->end_token(); }

  mutable std::vector<std::string> encoded;
  mutable std::vector<veridict::ScoringRequest> requests;
  mutable std::vector<std::vector<TokenId>> contexts;

 private:
  std::shared_ptr<const veridict::Backend> inner_;
  mutable std::mutex mu_;
};

inline std::shared_ptr<veridict::NgramBackend> ngram(const std::vector<std::string>& lines, int order = 2,
                                                      double alpha = 0.5) {
  return std::make_shared<veridict::NgramBackend>(veridict::NgramBackend::from_lines(lines, {order, alpha}));
}

}  // namespace vtest
