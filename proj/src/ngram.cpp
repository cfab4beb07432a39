#include "veridict/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace veridict {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < text.size()) {
    while (i < text.size() && space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !space(text[j])) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

Vocabulary Vocabulary::build(std::span<const std::string> lines) {
  std::set<std::string, std::less<>> words;
  for (const auto& line : lines) {
    for (auto& w : split_words(line)) words.insert(std::move(w));
  }
  words.erase(std::string(kUnknownWord));
  Vocabulary v;
  v.words_.emplace_back(kUnknownWord);
  for (const auto& w : words) v.words_.push_back(w);
  for (std::size_t i = 0; i < v.words_.size(); ++i) v.ids_.emplace(v.words_[i], static_cast<TokenId>(i));
  return v;
}

TokenId Vocabulary::id(std::string_view word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? kUnknown : it->second;
}

const std::string& Vocabulary::word(TokenId id) const {
  if (id >= words_.size()) fail(ErrorKind::VocabMismatch, "token id outside vocabulary");
  return words_[id];
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> out;
  for (const auto& w : split_words(text)) out.push_back(id(w));
  return out;
}

std::string Vocabulary::decode(std::span<const TokenId> tokens) const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += word(tokens[i]);
  }
  return out;
}

std::size_t NgramModel::KeyHash::operator()(const std::vector<TokenId>& key) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ key.size();
  for (TokenId t : key) {
    h ^= t;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h);
}

NgramModel NgramModel::train(std::span<const std::vector<TokenId>> corpus, std::size_t vocab_size,
                             int order, double alpha) {
  if (order < 1) fail(ErrorKind::ConfigError, "n-gram order must be at least 1");
  if (!(alpha > 0.0)) fail(ErrorKind::ConfigError, "smoothing constant must be positive");
  if (vocab_size == 0) fail(ErrorKind::ConfigError, "vocabulary size must be positive");
  std::size_t total_tokens = 0;
  for (const auto& line : corpus) total_tokens += line.size();
  if (total_tokens == 0) fail(ErrorKind::EmptyCorpus, "training corpus has no tokens");

  std::unordered_map<std::vector<TokenId>, std::map<TokenId, std::uint64_t>, KeyHash> counts;
  const auto max_ctx = static_cast<std::size_t>(order - 1);
  for (const auto& line : corpus) {
    validate_tokens(line, vocab_size);
    const std::size_t len = line.size();
    for (std::size_t t = 0; t <= len; ++t) {
      const TokenId target = t < len ? line[t] : Vocabulary::kUnknown;
      // The end-of-line event exists only for non-empty contexts.
      const std::size_t min_ctx = t < len ? 0 : 1;
      for (std::size_t m = min_ctx; m <= std::min(t, max_ctx); ++m) {
        std::vector<TokenId> ctx(line.begin() + static_cast<std::ptrdiff_t>(t - m),
                                 line.begin() + static_cast<std::ptrdiff_t>(t));
        ++counts[std::move(ctx)][target];
      }
    }
  }

  NgramModel model;
  model.order_ = order;
  model.alpha_ = alpha;
  model.vocab_size_ = vocab_size;
  model.table_.reserve(counts.size());
  for (auto& [ctx, successors] : counts) {
    ContextStats stats;
    for (const auto& [tok, c] : successors) {
      stats.total += c;
      stats.successors.emplace_back(tok, c);
    }
    model.table_.emplace(ctx, std::move(stats));
  }
  return model;
}

std::span<const TokenId> NgramModel::effective_context(std::span<const TokenId> history) const {
  const auto m = std::min(history.size(), static_cast<std::size_t>(order_ - 1));
  return history.last(m);
}

const NgramModel::ContextStats* NgramModel::find(std::span<const TokenId> context) const {
  auto it = table_.find(std::vector<TokenId>(context.begin(), context.end()));
  return it == table_.end() ? nullptr : &it->second;
}

std::uint64_t NgramModel::context_count(std::span<const TokenId> context) const {
  const auto* s = find(context);
  return s ? s->total : 0;
}

std::uint64_t NgramModel::count(std::span<const TokenId> context, TokenId token) const {
  const auto* s = find(context);
  if (!s) return 0;
  auto it = std::lower_bound(s->successors.begin(), s->successors.end(), token,
                             [](const auto& e, TokenId t) { return e.first < t; });
  return (it != s->successors.end() && it->first == token) ? it->second : 0;
}

double NgramModel::probability(std::span<const TokenId> history, TokenId token) const {
  if (token >= vocab_size_) fail(ErrorKind::VocabMismatch, "token id outside vocabulary");
  const auto ctx = effective_context(history);
  const double denom = static_cast<double>(context_count(ctx)) + alpha_ * static_cast<double>(vocab_size_);
  return (static_cast<double>(count(ctx, token)) + alpha_) / denom;
}

std::vector<double> NgramModel::conditional(std::span<const TokenId> history) const {
  const auto* s = find(effective_context(history));
  const double total = s ? static_cast<double>(s->total) : 0.0;
  const double denom = total + alpha_ * static_cast<double>(vocab_size_);
  std::vector<double> p(vocab_size_, alpha_ / denom);
  if (s) {
    for (const auto& [tok, c] : s->successors) p[tok] = (static_cast<double>(c) + alpha_) / denom;
  }
  return p;
}

NgramBackend::NgramBackend(std::shared_ptr<const Vocabulary> vocab, NgramModel model, double cache_weight,
                           double cache_prior)
    : vocab_(std::move(vocab)), model_(std::move(model)), cache_weight_(cache_weight), cache_prior_(cache_prior) {
  if (!vocab_) fail(ErrorKind::ConfigError, "n-gram backend needs a vocabulary");
  if (vocab_->size() != model_.vocab_size()) {
    fail(ErrorKind::VocabMismatch, "model and vocabulary sizes differ");
  }
  if (!(cache_weight_ >= 0.0) || std::isinf(cache_weight_)) {
    fail(ErrorKind::ConfigError, "cache weight must be finite and non-negative");
  }
  if (!(cache_prior_ > 0.0) || std::isinf(cache_prior_)) {
    fail(ErrorKind::ConfigError, "cache prior must be finite and positive");
  }
  if (cache_weight_ > 0.0) unigram_ = model_.conditional({});
}

NgramBackend NgramBackend::from_lines(std::span<const std::string> lines, const NgramOptions& options) {
  return from_lines(std::make_shared<const Vocabulary>(Vocabulary::build(lines)), lines, options);
}

NgramBackend NgramBackend::from_lines(std::shared_ptr<const Vocabulary> vocab,
                                      std::span<const std::string> lines, const NgramOptions& options) {
  std::vector<std::vector<TokenId>> corpus;
  corpus.reserve(lines.size());
  for (const auto& line : lines) corpus.push_back(vocab->encode(line));
  auto model = NgramModel::train(corpus, vocab->size(), options.order, options.alpha);
  return NgramBackend(std::move(vocab), std::move(model), options.cache_weight, options.cache_prior);
}

BackendCapabilities NgramBackend::capabilities() const {
  return {.full_distribution = true, .top_k = std::nullopt, .can_sample = true,
          .vocab_size = vocab_->size()};
}

std::string NgramBackend::describe() const {
  std::ostringstream os;
  os << "ngram(order=" << model_.order() << ",alpha=" << model_.alpha()
     << ",cache=" << cache_weight_ << "/" << cache_prior_ << ",C=" << vocab_->size() << ")";
  return os.str();
}

std::vector<TokenId> NgramBackend::encode(std::string_view text) const { return vocab_->encode(text); }

std::string NgramBackend::decode(std::span<const TokenId> tokens) const { return vocab_->decode(tokens); }

Distribution NgramBackend::distribution(std::span<const TokenId> history, std::span<const std::uint8_t> seen,
                                        std::size_t distinct) const {
  auto p = model_.conditional(history);
  if (cache_weight_ > 0.0 && distinct > 0) {
    const double denom = static_cast<double>(distinct) + cache_prior_;
    double z = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) {
      if (t != Vocabulary::kUnknown) {
        const double ratio = (static_cast<double>(seen[t]) + cache_prior_ * unigram_[t]) / (denom * unigram_[t]);
        p[t] *= cache_weight_ == 1.0 ? ratio : std::pow(ratio, cache_weight_);
      }
      z += p[t];
    }
    for (auto& x : p) x /= z;
  }
  for (auto& x : p) x = std::log(x);
  return Distribution::dense(std::move(p));
}

namespace {

// Marks `token` as present; returns 1 when it was new.
std::size_t mark_seen(std::vector<std::uint8_t>& seen, TokenId token) {
  if (token == Vocabulary::kUnknown || seen[token]) return 0;
  seen[token] = 1;
  return 1;
}

}  // namespace

Distribution NgramBackend::next_distribution(std::span<const TokenId> context) const {
  validate_tokens(context, vocab_->size());
  std::vector<std::uint8_t> seen(vocab_->size(), 0);
  std::size_t distinct = 0;
  if (cache_weight_ > 0.0) {
    for (TokenId t : context) distinct += mark_seen(seen, t);
  }
  return distribution(context, seen, distinct);
}

DistributionStream NgramBackend::score(const ScoringRequest& req) const {
  validate_tokens(req.prefix, vocab_->size());
  validate_tokens(req.body, vocab_->size());
  const auto positions = scored_positions(req);
  const auto context = req.context();
  std::vector<std::uint8_t> seen(vocab_->size(), 0);
  std::size_t distinct = 0;
  std::size_t consumed = 0;
  std::vector<Distribution> out;
  out.reserve(positions.size());
  for (std::size_t pos : positions) {
    const std::size_t history_len = pos - 1;
    if (cache_weight_ > 0.0) {
      for (; consumed < history_len; ++consumed) distinct += mark_seen(seen, context[consumed]);
    }
    out.push_back(distribution(std::span<const TokenId>(context).first(history_len), seen, distinct));
  }
  return DistributionStream(StreamKind::Full, std::move(out));
}

std::optional<TokenId> NgramBackend::end_token() const { return Vocabulary::kUnknown; }

UniformBackend::UniformBackend(std::size_t vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size_ == 0) fail(ErrorKind::ConfigError, "vocabulary size must be positive");
}

BackendCapabilities UniformBackend::capabilities() const {
  return {.full_distribution = true, .top_k = std::nullopt, .can_sample = true, .vocab_size = vocab_size_};
}

std::string UniformBackend::describe() const { return "uniform(C=" + std::to_string(vocab_size_) + ")"; }

std::vector<TokenId> UniformBackend::encode(std::string_view text) const {
  auto ids = parse_token_ids(text);
  validate_tokens(ids, vocab_size_);
  return ids;
}

Distribution UniformBackend::next_distribution(std::span<const TokenId> context) const {
  validate_tokens(context, vocab_size_);
  return Distribution::dense(std::vector<double>(vocab_size_, -std::log(static_cast<double>(vocab_size_))));
}

DistributionStream UniformBackend::score(const ScoringRequest& req) const {
  validate_tokens(req.prefix, vocab_size_);
  validate_tokens(req.body, vocab_size_);
  const std::size_t n = scored_count(req);
  return DistributionStream(StreamKind::Full, std::vector<Distribution>(n, next_distribution({})));
}

}  // namespace veridict
