#pragma once

// Seeded synthetic benchmark: a topic-structured artificial language for
// training a generator model and supplying human documents, and a
// prompt-driven generator of ai samples.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "veridict/backend.hpp"
#include "veridict/eval.hpp"

namespace veridict {

inline constexpr std::string_view kDefaultPromptTemplate =
    "Would you summarize the following sentences, please? {text}";

struct WorldSpec {
  std::size_t function_words = 10;
  std::size_t successors_per_function_word = 3;
  std::size_t resume_words = 3;  // function words that may follow a content word
  std::size_t function_run = 2;  // function words before each content word
  std::size_t content_words = 1000;
  double content_novelty = 2.0;  // higher => more distinct content words per document
  std::size_t doc_length = 100;
  std::size_t training_documents = 10000;
  std::size_t human_documents = 400;
  // Human documents come from a dialect whose function-word transitions are
  // reweighted over the same successors: 0 keeps the training language,
  // 1 reverses each row's weight order. Each human document draws its own
  // strength from human_dialect +- human_dialect_spread.
  double human_dialect = 0.5;
  double human_dialect_spread = 0.5;
  // Human documents are excerpts: this many tokens of each are generated and
  // dropped first, as an ai continuation follows its whole prompt document.
  std::size_t human_lead = 200;
};

struct SyntheticWorld {
  std::vector<std::string> training;  // one document per line
  std::vector<std::string> human;     // disjoint from training, in the human dialect
};

SyntheticWorld make_world(const WorldSpec& spec, std::uint64_t seed);

// n human samples from human_source[0, n), and n ai samples generated by
// `generator` conditioned on a prompt built from human_source[n + i] with
// prompt_templates[i % size]. "{text}" in a template is replaced by the
// document; without it the document is appended. Each ai sample has gen_len
// tokens drawn from the next-token distribution raised to 1/temperature and
// never contains the generator's end token.
std::vector<LabeledSample> synth_corpus(const Backend& generator, std::span<const std::string> human_source,
                                        std::span<const std::string> prompt_templates, std::size_t n_per_class,
                                        std::size_t gen_len, std::uint64_t seed, double temperature = 1.0);

std::string fill_template(std::string_view tmpl, std::string_view text);

}  // namespace veridict
