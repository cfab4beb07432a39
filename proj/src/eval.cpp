#include "veridict/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "parallel.hpp"
#include "veridict/perturb.hpp"
#include "veridict/rng.hpp"

namespace veridict {

using nlohmann::ordered_json;

std::string_view to_string(Label label) { return label == Label::Ai ? "ai" : "human"; }

std::string_view to_string(Mode mode) { return mode == Mode::White ? "white" : "black"; }

Mode parse_mode(std::string_view name) {
  if (name == "black") return Mode::Black;
  if (name == "white") return Mode::White;
  fail(ErrorKind::ConfigError, "mode must be 'black' or 'white', got '" + std::string(name) + "'");
}

std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::vector<LabeledSample> read_corpus(std::istream& in) {
  std::vector<LabeledSample> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, e.what());
    }
    if (!j.is_object()) throw ParseError(line_no, "record is not an object");
    LabeledSample s;
    try {
      s.id = j.at("id").get<std::string>();
      s.text = j.at("text").get<std::string>();
      const auto label = j.at("label").get<std::string>();
      if (label == "human") {
        s.label = Label::Human;
      } else if (label == "ai") {
        s.label = Label::Ai;
      } else {
        throw ParseError(line_no, "label must be 'human' or 'ai', got '" + label + "'");
      }
      if (j.contains("prompt") && !j.at("prompt").is_null()) s.prompt = j.at("prompt").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
    if (!ids.insert(s.id).second) throw ParseError(line_no, "duplicate id '" + s.id + "'");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LabeledSample> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open corpus '" + path + "'");
  return read_corpus(in);
}

void write_corpus(std::ostream& out, std::span<const LabeledSample> samples) {
  for (const auto& s : samples) {
    ordered_json j;
    j["id"] = s.id;
    j["text"] = s.text;
    j["label"] = std::string(to_string(s.label));
    if (s.prompt) j["prompt"] = *s.prompt;
    out << j.dump() << '\n';
  }
}

double roc_auc(std::span<const double> ai_scores, std::span<const double> human_scores) {
  if (ai_scores.empty() || human_scores.empty()) {
    fail(ErrorKind::InsufficientData, "AUC needs at least one score per class");
  }
  for (double v : ai_scores) {
    if (!std::isfinite(v)) fail(ErrorKind::NonFiniteScore, "non-finite ai score");
  }
  std::vector<double> human(human_scores.begin(), human_scores.end());
  for (double v : human) {
    if (!std::isfinite(v)) fail(ErrorKind::NonFiniteScore, "non-finite human score");
  }
  std::sort(human.begin(), human.end());
  // Counted in half-units so the numerator stays an exact integer.
  std::uint64_t halves = 0;
  for (double a : ai_scores) {
    const auto lo = std::lower_bound(human.begin(), human.end(), a);
    const auto hi = std::upper_bound(lo, human.end(), a);
    halves += 2 * static_cast<std::uint64_t>(lo - human.begin()) + static_cast<std::uint64_t>(hi - lo);
  }
  return static_cast<double>(halves) / 2.0 /
         (static_cast<double>(ai_scores.size()) * static_cast<double>(human.size()));
}

std::uint64_t sample_seed(std::uint64_t master, std::string_view sample_id, DetectorId detector) {
  return mix_seed(mix_seed(master, hash_string(sample_id)), static_cast<std::uint64_t>(detector));
}

namespace {

bool uses(const EvalConfig& cfg, DetectorId id) {
  return std::find(cfg.detectors.begin(), cfg.detectors.end(), id) != cfg.detectors.end();
}

Score compute(DetectorId id, const ScoringRequest& req, const DistributionStream& stream,
              const BackendSet& backends, const DetectorConfig& dcfg, std::uint64_t seed) {
  const auto& primary = *backends.primary;
  switch (id) {
    case DetectorId::LogLikelihood: return log_likelihood(stream, req.body, dcfg);
    case DetectorId::Entropy: return entropy_score(stream);
    case DetectorId::Rank: return rank_score(stream, req.body);
    case DetectorId::LogRank: return log_rank_score(stream, req.body);
    case DetectorId::Lrr: return lrr_score(stream, req.body, dcfg);
    case DetectorId::DetectGpt: {
      const BackendReplacer replacer(primary);
      return detectgpt_score(stream, mask_perturbations(req, dcfg.rate, dcfg.k, replacer, seed), primary, dcfg);
    }
    case DetectorId::Npr: {
      const BackendReplacer replacer(primary);
      return npr_score(stream, mask_perturbations(req, dcfg.rate, dcfg.k, replacer, seed), primary, dcfg);
    }
    case DetectorId::FastDetectGpt: return fast_detectgpt_score(stream, req, primary, dcfg, seed);
    case DetectorId::FastNpr: return fast_npr_score(stream, req, primary, dcfg, seed);
    case DetectorId::Binoculars: {
      const auto second = backends.secondary->score(req);
      return binoculars_score(stream, second, req.body, dcfg);
    }
  }
  fail(ErrorKind::ConfigError, "unhandled detector");
}

std::vector<double> class_scores(const std::vector<SampleScore>& rows, DetectorId id, Label label) {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.detector == id && r.label == label) out.push_back(r.score);
  }
  return out;
}

std::vector<std::string> describe(const BackendSet& backends) {
  std::vector<std::string> out{backends.primary->describe()};
  if (backends.secondary) out.push_back(backends.secondary->describe());
  return out;
}

ordered_json config_json(const EvalConfig& cfg, const std::vector<std::string>& backends) {
  ordered_json j;
  j["mode"] = std::string(to_string(cfg.mode));
  auto detectors = ordered_json::array();
  for (auto d : cfg.detectors) detectors.push_back(std::string(to_string(d)));
  j["detectors"] = std::move(detectors);
  j["k"] = cfg.detector.k;
  j["rate"] = cfg.detector.rate;
  j["sigma_floor"] = cfg.detector.sigma_floor;
  j["epsilon_logrank"] = cfg.detector.epsilon_logrank;
  j["strict_topk"] = cfg.detector.strict_topk;
  j["seed"] = cfg.seed;
  if (cfg.threshold) j["threshold"] = *cfg.threshold;
  j["backends"] = backends;
  return j;
}

}  // namespace

void check_run(std::span<const LabeledSample> samples, const EvalConfig& cfg, const BackendSet& backends) {
  validate(cfg.detector);
  if (cfg.detectors.empty()) fail(ErrorKind::ConfigError, "no detectors selected");
  if (!backends.primary) fail(ErrorKind::ConfigError, "no backend given");
  const bool binoculars = uses(cfg, DetectorId::Binoculars);
  if (binoculars && !backends.secondary) {
    fail(ErrorKind::ConfigError, "binoculars needs exactly two backends");
  }
  if (!binoculars && backends.secondary) {
    fail(ErrorKind::ConfigError, "a second backend is only used by binoculars");
  }
  const auto caps = backends.primary->capabilities();
  for (DetectorId id : cfg.detectors) {
    const auto need = needs(id);
    const std::string who = std::string(to_string(id)) + " on " + backends.primary->describe();
    if (need.full_distribution && !caps.full_distribution) {
      fail(ErrorKind::CapabilityError, who + ": detector needs full distributions");
    }
    if (need.sampling && !caps.can_sample) {
      fail(ErrorKind::CapabilityError, who + ": detector needs a backend that can sample");
    }
    if ((id == DetectorId::DetectGpt || id == DetectorId::FastDetectGpt) && cfg.detector.k < 2) {
      fail(ErrorKind::ConfigError, std::string(to_string(id)) + " needs k >= 2");
    }
  }
  if (binoculars) {
    const auto second = backends.secondary->capabilities();
    if (!second.full_distribution) {
      fail(ErrorKind::CapabilityError, "binoculars on " + backends.secondary->describe() +
                                           ": detector needs full distributions");
    }
    if (second.vocab_size != caps.vocab_size) {
      fail(ErrorKind::VocabMismatch, "binoculars models must share a vocabulary");
    }
  }
  if (cfg.mode == Mode::White) {
    for (const auto& s : samples) {
      if (s.label == Label::Ai && !s.prompt) {
        fail(ErrorKind::MissingPrompt, "white-box mode needs a prompt on ai sample '" + s.id + "'");
      }
    }
  }
}

ScoringRequest build_request(const LabeledSample& sample, Mode mode, const Backend& backend) {
  ScoringRequest req;
  if (mode == Mode::White && sample.label == Label::Ai) {
    if (!sample.prompt) fail(ErrorKind::MissingPrompt, "ai sample '" + sample.id + "' has no prompt");
    req.prefix = backend.encode(*sample.prompt);
  }
  req.body = backend.encode(sample.text);
  return req;
}

std::vector<Score> score_sample(const LabeledSample& sample, const EvalConfig& cfg, const BackendSet& backends) {
  const auto req = build_request(sample, cfg.mode, *backends.primary);
  const auto stream = backends.primary->score(req);
  std::vector<Score> out;
  for (DetectorId id : cfg.detectors) {
    out.push_back(compute(id, req, stream, backends, cfg.detector, sample_seed(cfg.seed, sample.id, id)));
  }
  return out;
}

EvalReport run_detection(std::span<const LabeledSample> samples, const EvalConfig& cfg,
                         const BackendSet& backends) {
  check_run(samples, cfg, backends);
  std::vector<std::vector<SampleScore>> rows(samples.size());
  detail::parallel_for(samples.size(), cfg.jobs, [&](std::size_t i) {
    const auto& sample = samples[i];
    const auto scores = score_sample(sample, cfg, backends);
    for (const Score& s : scores) rows[i].push_back({sample.id, sample.label, s.detector(), s.raw(), s.value()});
  });

  EvalReport report;
  report.config = cfg;
  report.backends = describe(backends);
  for (const auto& s : samples) (s.label == Label::Ai ? report.ai_count : report.human_count)++;
  for (auto& r : rows) {
    for (auto& row : r) report.per_sample.push_back(std::move(row));
  }
  for (DetectorId id : cfg.detectors) {
    const auto ai = class_scores(report.per_sample, id, Label::Ai);
    const auto human = class_scores(report.per_sample, id, Label::Human);
    report.summary.push_back({id, cfg.mode, roc_auc(ai, human)});
  }
  return report;
}

void write_report_json(std::ostream& out, const EvalReport& report) {
  ordered_json j;
  j["config"] = config_json(report.config, report.backends);
  j["metadata"] = {{"samples", report.ai_count + report.human_count},
                   {"ai", report.ai_count},
                   {"human", report.human_count}};
  auto rows = ordered_json::array();
  for (const auto& r : report.per_sample) {
    ordered_json row;
    row["id"] = r.id;
    row["label"] = std::string(to_string(r.label));
    row["detector"] = std::string(to_string(r.detector));
    row["raw"] = r.raw;
    row["score"] = r.score;
    if (report.config.threshold) row["predicted"] = r.score > *report.config.threshold ? "ai" : "human";
    rows.push_back(std::move(row));
  }
  j["per_sample"] = std::move(rows);
  auto summary = ordered_json::array();
  for (const auto& s : report.summary) {
    summary.push_back({{"detector", std::string(to_string(s.detector))},
                       {"mode", std::string(to_string(s.mode))},
                       {"auc", s.auc}});
  }
  j["summary"] = std::move(summary);
  out << j.dump(2) << '\n';
}

namespace {

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "id,label,detector,mode,raw,score\n";
  for (const auto& r : report.per_sample) {
    out << csv_field(r.id) << ',' << to_string(r.label) << ',' << to_string(r.detector) << ','
        << to_string(report.config.mode) << ',' << format_double(r.raw) << ',' << format_double(r.score) << '\n';
  }
}

SweepResult sweep(std::span<const LabeledSample> samples, const EvalConfig& cfg, const BackendSet& backends,
                  std::span<const double> rates, std::span<const std::size_t> sizes) {
  static constexpr DetectorId kSweepable[] = {DetectorId::FastDetectGpt, DetectorId::DetectGpt, DetectorId::Npr,
                                              DetectorId::FastNpr};
  for (DetectorId id : cfg.detectors) {
    if (std::find(std::begin(kSweepable), std::end(kSweepable), id) == std::end(kSweepable)) {
      fail(ErrorKind::ConfigError, std::string(to_string(id)) + " has no rate or sample size to sweep");
    }
  }
  if (rates.empty() || sizes.empty()) fail(ErrorKind::ConfigError, "sweep needs at least one rate and one size");
  for (std::size_t k : sizes) {
    EvalConfig probe = cfg;
    probe.detector.k = k;
    for (double r : rates) {
      probe.detector.rate = r;
      check_run(samples, probe, backends);
    }
  }

  // cells[c][d][i]: score of sample i for detector d in grid cell c
  const std::size_t n_cells = rates.size() * sizes.size();
  std::vector<std::vector<std::vector<double>>> cells(
      n_cells, std::vector<std::vector<double>>(cfg.detectors.size(), std::vector<double>(samples.size())));
  detail::parallel_for(samples.size(), cfg.jobs, [&](std::size_t i) {
    const auto& sample = samples[i];
    const auto req = build_request(sample, cfg.mode, *backends.primary);
    const auto stream = backends.primary->score(req);
    for (std::size_t si = 0; si < sizes.size(); ++si) {
      for (std::size_t ri = 0; ri < rates.size(); ++ri) {
        DetectorConfig dcfg = cfg.detector;
        dcfg.k = sizes[si];
        dcfg.rate = rates[ri];
        for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
          const DetectorId id = cfg.detectors[d];
          cells[si * rates.size() + ri][d][i] =
              compute(id, req, stream, backends, dcfg, sample_seed(cfg.seed, sample.id, id)).value();
        }
      }
    }
  });

  SweepResult result;
  result.config = cfg;
  result.backends = describe(backends);
  for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
    for (std::size_t si = 0; si < sizes.size(); ++si) {
      for (std::size_t ri = 0; ri < rates.size(); ++ri) {
        const auto& scores = cells[si * rates.size() + ri][d];
        std::vector<double> ai, human;
        for (std::size_t i = 0; i < samples.size(); ++i) {
          (samples[i].label == Label::Ai ? ai : human).push_back(scores[i]);
        }
        result.rows.push_back({cfg.detectors[d], rates[ri], sizes[si], roc_auc(ai, human)});
      }
    }
  }
  return result;
}

void write_sweep_json(std::ostream& out, const SweepResult& result) {
  ordered_json j;
  j["config"] = config_json(result.config, result.backends);
  auto rows = ordered_json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"detector", std::string(to_string(r.detector))},
                    {"mode", std::string(to_string(result.config.mode))},
                    {"rate", r.rate},
                    {"k", r.k},
                    {"auc", r.auc}});
  }
  j["rows"] = std::move(rows);
  out << j.dump(2) << '\n';
}

void write_sweep_table(std::ostream& out, const SweepResult& result) {
  out << std::left << std::setw(16) << "Method" << std::setw(8) << "SR" << std::setw(8) << "SS" << "AUC\n";
  for (const auto& r : result.rows) {
    std::ostringstream rate;
    rate << std::setprecision(4) << r.rate * 100.0 << '%';
    std::ostringstream auc;
    auc << std::fixed << std::setprecision(3) << r.auc;
    out << std::left << std::setw(16) << to_string(r.detector) << std::setw(8) << rate.str() << std::setw(8)
        << r.k << auc.str() << '\n';
  }
}

}  // namespace veridict
