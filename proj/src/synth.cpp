#include "veridict/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "veridict/rng.hpp"

namespace veridict {

namespace {

constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u"};
constexpr std::string_view kCodas[] = {"", "n", "r", "s", "l"};

// Distinct index => distinct word; content words carry a coda on their last
// syllable so the two classes never collide.
std::string make_word(std::size_t index, std::size_t syllables, bool content) {
  std::string w;
  for (std::size_t s = 0; s < syllables; ++s) {
    w += kOnsets[index % std::size(kOnsets)];
    index /= std::size(kOnsets);
    w += kVowels[index % std::size(kVowels)];
    index /= std::size(kVowels);
  }
  if (content) {
    w += kCodas[1 + index % (std::size(kCodas) - 1)];
    index /= std::size(kCodas) - 1;
  }
  if (index > 0) w += std::to_string(index);
  return w;
}

struct Categorical {
  std::vector<double> cdf;

  explicit Categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) cdf.push_back(total += w);
    for (auto& c : cdf) c /= total;
  }
  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform();
    std::size_t i = 0;
    while (i + 1 < cdf.size() && u >= cdf[i]) ++i;
    return i;
  }
};

class Language {
 public:
  // Successor sets are drawn from `rng`. A document's dialect moves each
  // row's weights toward the reversed order.
  Language(const WorldSpec& spec, Rng& rng) : spec_(spec) {
    for (std::size_t i = 0; i < spec.function_words; ++i) function_.push_back(make_word(i, 1, false));
    for (std::size_t i = 0; i < spec.content_words; ++i) content_.push_back(make_word(i, 2, true));
    // Sparse successor table over function words: m distinct successors per row.
    const std::size_t m = std::min(spec.successors_per_function_word, spec.function_words);
    std::vector<std::size_t> order(spec.function_words);
    for (std::size_t f = 0; f < spec.function_words; ++f) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::vector<double> fwd(spec.function_words, 0.0);
      std::vector<double> rev(spec.function_words, 0.0);
      for (std::size_t s = 0; s < m; ++s) {
        std::swap(order[s], order[s + rng.below(order.size() - s)]);
        fwd[order[s]] = 1.0 / static_cast<double>(s + 1);
        rev[order[s]] = 1.0 / static_cast<double>(m - s);
      }
      forward_.push_back(std::move(fwd));
      reversed_.push_back(std::move(rev));
    }
  }

  // Tokens [skip, skip + doc_length) of a longer document.
  std::string document(Rng& rng, double dialect, std::size_t skip) const {
    std::vector<Categorical> grammar;
    for (std::size_t f = 0; f < forward_.size(); ++f) {
      std::vector<double> w(forward_[f].size());
      for (std::size_t j = 0; j < w.size(); ++j) w[j] = (1.0 - dialect) * forward_[f][j] + dialect * reversed_[f][j];
      grammar.emplace_back(w);
    }
    // Blocks of function_run function words and one content word. A content
    // word is new with chance novelty / (used + novelty), otherwise one of the
    // document's earlier content words.
    std::vector<std::size_t> used;
    std::string out;
    std::size_t last_function = 0;
    for (std::size_t n = 0; n < skip + spec_.doc_length; ++n) {
      std::string word;
      const std::size_t slot = n % (spec_.function_run + 1);
      if (slot == spec_.function_run) {
        const double fresh = spec_.content_novelty / (static_cast<double>(used.size()) + spec_.content_novelty);
        if (used.empty() || rng.uniform() < fresh) {
          used.push_back(rng.below(content_.size()));
          word = content_[used.back()];
        } else {
          word = content_[used[rng.below(used.size())]];
        }
      } else {
        // The first function word of a block ignores what came before, so
        // no dependency reaches across a content word.
        last_function = slot > 0 ? grammar[last_function].draw(rng) : rng.below(spec_.resume_words);
        word = function_[last_function];
      }
      if (n < skip) continue;
      if (!out.empty()) out += ' ';
      out += word;
    }
    return out;
  }

 private:
  const WorldSpec& spec_;
  std::vector<std::string> function_;
  std::vector<std::string> content_;
  std::vector<std::vector<double>> forward_;
  std::vector<std::vector<double>> reversed_;
};

}  // namespace

SyntheticWorld make_world(const WorldSpec& spec, std::uint64_t seed) {
  if (spec.function_words == 0 || spec.successors_per_function_word == 0 || spec.resume_words == 0 ||
      spec.resume_words > spec.function_words || spec.function_run == 0 || spec.content_words == 0 ||
      spec.doc_length == 0) {
    fail(ErrorKind::ConfigError, "world dimensions must be positive");
  }
  if (!(spec.content_novelty > 0.0) || std::isinf(spec.content_novelty)) {
    fail(ErrorKind::ConfigError, "content_novelty must be positive and finite");
  }
  if (!(spec.human_dialect_spread >= 0.0 && spec.human_dialect - spec.human_dialect_spread >= 0.0 &&
        spec.human_dialect + spec.human_dialect_spread <= 1.0)) {
    fail(ErrorKind::ConfigError, "human dialects must stay in [0, 1]");
  }
  Rng grammar_rng(mix_seed(seed, 0));
  const Language language(spec, grammar_rng);
  SyntheticWorld world;
  Rng train_rng(mix_seed(seed, 1));
  for (std::size_t i = 0; i < spec.training_documents; ++i) world.training.push_back(language.document(train_rng, 0.0, 0));
  Rng human_rng(mix_seed(seed, 2));
  for (std::size_t i = 0; i < spec.human_documents; ++i) {
    const double dialect = spec.human_dialect + spec.human_dialect_spread * (2.0 * human_rng.uniform() - 1.0);
    world.human.push_back(language.document(human_rng, dialect, spec.human_lead));
  }
  return world;
}

std::string fill_template(std::string_view tmpl, std::string_view text) {
  constexpr std::string_view kSlot = "{text}";
  const auto at = tmpl.find(kSlot);
  if (at == std::string_view::npos) return std::string(tmpl) + " " + std::string(text);
  return std::string(tmpl.substr(0, at)) + std::string(text) + std::string(tmpl.substr(at + kSlot.size()));
}

std::vector<LabeledSample> synth_corpus(const Backend& generator, std::span<const std::string> human_source,
                                        std::span<const std::string> prompt_templates, std::size_t n_per_class,
                                        std::size_t gen_len, std::uint64_t seed, double temperature) {
  if (!generator.capabilities().can_sample) {
    fail(ErrorKind::CapabilityError, generator.describe() + " cannot generate text");
  }
  if (n_per_class == 0 || gen_len < 2) fail(ErrorKind::ConfigError, "need n_per_class >= 1 and gen_len >= 2");
  if (!(temperature > 0.0) || std::isinf(temperature)) fail(ErrorKind::ConfigError, "temperature must be positive and finite");
  if (human_source.size() < 2 * n_per_class) {
    fail(ErrorKind::InsufficientData, "need " + std::to_string(2 * n_per_class) +
                                          " human documents (samples plus prompt material), got " +
                                          std::to_string(human_source.size()));
  }
  const std::vector<std::string> fallback{std::string(kDefaultPromptTemplate)};
  if (prompt_templates.empty()) prompt_templates = fallback;

  auto make_id = [](const char* kind, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%04zu", kind, i);
    return std::string(buf);
  };

  const auto end = generator.end_token();
  std::vector<LabeledSample> out;
  out.reserve(2 * n_per_class);
  for (std::size_t i = 0; i < n_per_class; ++i) {
    out.push_back({make_id("human", i), human_source[i], Label::Human, std::nullopt});
  }
  for (std::size_t i = 0; i < n_per_class; ++i) {
    const std::string prompt = fill_template(prompt_templates[i % prompt_templates.size()],
                                             human_source[n_per_class + i]);
    auto context = generator.encode(prompt);
    const std::size_t start = context.size();
    const std::uint64_t sample_seed = mix_seed(seed, i);
    for (std::size_t step = 0; step < gen_len; ++step) {
      const std::uint64_t step_seed = mix_seed(sample_seed, step);
      if (!end && temperature == 1.0) {
        context.push_back(generator.sample(context, 1, step_seed).front());
        continue;
      }
      // Draw from the tempered next-token distribution without the end
      // token, so every ai sample has exactly gen_len tokens like the
      // fixed-length human documents it is compared with.
      const Distribution next = generator.next_distribution(context);
      if (!next.is_dense()) fail(ErrorKind::CapabilityError, "generation needs full next-token distributions");
      const auto lps = next.logprobs();
      const double top = *std::max_element(lps.begin(), lps.end());
      std::vector<double> probs(lps.size());
      double total = 0.0;
      for (std::size_t t = 0; t < probs.size(); ++t) {
        probs[t] = end && t == *end ? 0.0 : std::exp((lps[t] - top) / temperature);
        total += probs[t];
      }
      if (!(total > 0.0)) fail(ErrorKind::ReplacementError, "generator can only end the sequence");
      for (auto& p : probs) p /= total;
      Rng rng(step_seed);
      context.push_back(AliasTable(Distribution::from_probs(probs)).draw(rng));
    }
    const std::span<const TokenId> generated(context.begin() + static_cast<std::ptrdiff_t>(start), context.end());
    out.push_back({make_id("ai", i), generator.decode(generated), Label::Ai, prompt});
  }
  return out;
}

}  // namespace veridict
