#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "veridict/backend.hpp"
#include "veridict/detectors.hpp"

namespace veridict {

enum class Label { Human, Ai };
std::string_view to_string(Label label);

struct LabeledSample {
  std::string id;
  std::string text;
  Label label = Label::Human;
  std::optional<std::string> prompt;
};

// Line-delimited JSON records {"id","text","label":"human"|"ai","prompt"?}.
std::vector<LabeledSample> read_corpus(std::istream& in);
std::vector<LabeledSample> load_corpus(const std::string& path);
void write_corpus(std::ostream& out, std::span<const LabeledSample> samples);

// Black: every sample scored alone. White: ai samples are conditioned on
// their prompt; human samples are still scored alone.
enum class Mode { Black, White };
std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view name);

struct EvalConfig {
  Mode mode = Mode::Black;
  std::vector<DetectorId> detectors;
  DetectorConfig detector;
  std::uint64_t seed = 0;
  std::optional<double> threshold;
  std::size_t jobs = 1;
};

// primary scores every detector; secondary is the second model of
// binoculars and must share the primary's vocabulary.
struct BackendSet {
  std::shared_ptr<const Backend> primary;
  std::shared_ptr<const Backend> secondary;
};

struct SampleScore {
  std::string id;
  Label label;
  DetectorId detector;
  double raw;
  double score;
};

struct DetectorSummary {
  DetectorId detector;
  Mode mode;
  double auc;
};

struct EvalReport {
  EvalConfig config;
  std::vector<std::string> backends;
  std::size_t ai_count = 0;
  std::size_t human_count = 0;
  std::vector<SampleScore> per_sample;  // sample-major, detectors in config order
  std::vector<DetectorSummary> summary;
};

// Mann-Whitney AUC: P(ai > human) + 0.5 P(ai == human).
double roc_auc(std::span<const double> ai_scores, std::span<const double> human_scores);

// Seed of the perturbations drawn for one sample and detector.
std::uint64_t sample_seed(std::uint64_t master, std::string_view sample_id, DetectorId detector);

// Throws MissingPrompt / CapabilityError before any scoring call.
void check_run(std::span<const LabeledSample> samples, const EvalConfig& cfg, const BackendSet& backends);

// The scoring request a sample gets in `mode`.
ScoringRequest build_request(const LabeledSample& sample, Mode mode, const Backend& backend);

// Scores of one sample, in cfg.detectors order. check_run is not called.
std::vector<Score> score_sample(const LabeledSample& sample, const EvalConfig& cfg, const BackendSet& backends);

EvalReport run_detection(std::span<const LabeledSample> samples, const EvalConfig& cfg,
                         const BackendSet& backends);

void write_report_json(std::ostream& out, const EvalReport& report);
// One row per sample x detector.
void write_report_csv(std::ostream& out, const EvalReport& report);

struct SweepRow {
  DetectorId detector;
  double rate;
  std::size_t k;
  double auc;
};

struct SweepResult {
  EvalConfig config;
  std::vector<std::string> backends;
  std::vector<SweepRow> rows;  // per detector: sizes outer, rates inner
};

// AUC of each perturbation detector over the rates x sizes grid. Each
// sample's original stream is computed once and reused by every cell, and
// per-sample seeds do not depend on the cell.
SweepResult sweep(std::span<const LabeledSample> samples, const EvalConfig& cfg, const BackendSet& backends,
                  std::span<const double> rates, std::span<const std::size_t> sizes);

void write_sweep_json(std::ostream& out, const SweepResult& result);
void write_sweep_table(std::ostream& out, const SweepResult& result);

// Shortest decimal form that reads back to the same double.
std::string format_double(double value);

}  // namespace veridict
