#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "oracle.hpp"
#include "veridict/eval.hpp"
#include "veridict/ngram.hpp"
#include "veridict/replay.hpp"
#include "veridict/rng.hpp"
#include "veridict/synth.hpp"

using namespace veridict;

namespace {

const std::vector<std::string> kTrain{
    "the cat sat on the mat and the dog sat on the log",
    "a bird sang in the tree while the cat slept",
    "the dog ran to the park and the bird flew away",
    "on the mat the cat and the dog slept in the sun",
};

std::vector<LabeledSample> small_corpus() {
  return {
      {"h1", "a dog sang on the park", Label::Human, std::nullopt},
      {"h2", "tree the in slept bird", Label::Human, std::nullopt},
      {"h3", "the sun ran while a log flew", Label::Human, std::nullopt},
      {"a1", "the cat sat on the mat", Label::Ai, "where did the cat sit"},
      {"a2", "the dog sat on the log", Label::Ai, "and the dog"},
      {"a3", "the bird flew away", Label::Ai, "a bird sang in the tree"},
  };
}

BackendSet one(std::shared_ptr<const Backend> b) { return {std::move(b), nullptr}; }

std::string report_json(const EvalReport& r) {
  std::ostringstream out;
  write_report_json(out, r);
  return out.str();
}

}  // namespace

TEST(RocAuc, Examples) {
  EXPECT_EQ(roc_auc(std::vector<double>{0.9, 0.8}, std::vector<double>{0.1, 0.2}), 1.0);
  EXPECT_EQ(roc_auc(std::vector<double>{0.9, 0.3}, std::vector<double>{0.5, 0.1}), 0.75);
  EXPECT_EQ(roc_auc(std::vector<double>{1, 2, 2, 3}, std::vector<double>{3, 2, 1, 2}), 0.5);
  EXPECT_ERROR(InsufficientData, roc_auc(std::vector<double>{}, std::vector<double>{1}));
  EXPECT_ERROR(NonFiniteScore, roc_auc(std::vector<double>{NAN}, std::vector<double>{1}));
}

TEST(RocAuc, MatchesPairCountingWithTies) {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> a(1 + rng.below(50)), h(1 + rng.below(50));
    for (auto& x : a) x = static_cast<double>(rng.below(8));
    for (auto& x : h) x = static_cast<double>(rng.below(8));
    const double got = roc_auc(a, h);
    EXPECT_EQ(got, oracle::auc(a, h));
    EXPECT_NEAR(got + roc_auc(h, a), 1.0, 1e-15);
    std::vector<double> ta, th;
    for (double x : a) ta.push_back(std::exp(x) * 3 - 7);
    for (double x : h) th.push_back(std::exp(x) * 3 - 7);
    EXPECT_EQ(roc_auc(ta, th), got);
  }
}

TEST(CorpusFormat, ReadWrite) {
  std::istringstream in(R"({"id":"1","text":"hello","label":"human"}
{"id":"2","text":"x y","label":"ai","prompt":"p"}

)");
  const auto samples = read_corpus(in);
  ASSERT_EQ(samples.size(), 2u);
  EXPECT_FALSE(samples[0].prompt);
  EXPECT_EQ(samples[1].label, Label::Ai);
  EXPECT_EQ(*samples[1].prompt, "p");
  std::ostringstream out;
  write_corpus(out, samples);
  EXPECT_EQ(out.str(), "{\"id\":\"1\",\"text\":\"hello\",\"label\":\"human\"}\n"
                       "{\"id\":\"2\",\"text\":\"x y\",\"label\":\"ai\",\"prompt\":\"p\"}\n");
}

TEST(CorpusFormat, Errors) {
  auto read = [](const std::string& s) {
    std::istringstream in(s);
    return read_corpus(in);
  };
  EXPECT_ERROR(ParseError, read(R"({"id":"1","text":"t","label":"robot"})"));
  EXPECT_ERROR(ParseError, read(R"({"id":"1","label":"ai"})"));
  EXPECT_ERROR(ParseError, read("{\"id\":\"1\",\"text\":\"t\",\"label\":\"ai\"}\n{\"id\":\"1\",\"text\":\"u\",\"label\":\"ai\"}"));
  try {
    read("{\"id\":\"1\",\"text\":\"t\",\"label\":\"ai\"}\n[1]\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_ERROR(IoError, load_corpus("/nonexistent/corpus.jsonl"));
}

TEST(CorpusFormat, FourHundredSamples) {
  std::ostringstream out;
  for (int i = 0; i < 400; ++i) {
    out << "{\"id\":\"s" << i << "\",\"text\":\"a b\",\"label\":\"" << (i % 2 ? "ai" : "human") << "\"}\n";
  }
  std::istringstream in(out.str());
  EXPECT_EQ(read_corpus(in).size(), 400u);
}

TEST(RunDetection, WhiteModeConditionsOnlyAiSamples) {
  const auto spy = std::make_shared<vtest::SpyBackend>(vtest::ngram(kTrain, 3, 0.1));
  EvalConfig cfg;
  cfg.mode = Mode::White;
  cfg.detectors = {DetectorId::LogLikelihood};
  const auto samples = small_corpus();
  const auto report = run_detection(samples, cfg, one(spy));
  ASSERT_EQ(spy->requests.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& req = spy->requests[i];
    EXPECT_EQ(req.body, spy->encode(samples[i].text));
    if (samples[i].label == Label::Ai) {
      EXPECT_EQ(req.prefix, spy->encode(*samples[i].prompt));
    } else {
      EXPECT_TRUE(req.prefix.empty());
    }
  }
  // The score uses body positions only: recompute from the stream.
  const auto& req = spy->requests[3];
  const auto stream = spy->score(req);
  EXPECT_EQ(stream.size(), req.body.size());
  EXPECT_EQ(report.per_sample[3].score, log_likelihood(stream, req.body).value());
}

TEST(RunDetection, BlackModeNeverTouchesPrompts) {
  const auto spy = std::make_shared<vtest::SpyBackend>(vtest::ngram(kTrain, 3, 0.1));
  EvalConfig cfg;
  cfg.detectors = {DetectorId::LogLikelihood, DetectorId::FastDetectGpt, DetectorId::Npr};
  const auto samples = small_corpus();
  run_detection(samples, cfg, one(spy));
  std::set<std::string> prompts;
  for (const auto& s : samples) {
    if (s.prompt) prompts.insert(*s.prompt);
  }
  for (const auto& text : spy->encoded) EXPECT_FALSE(prompts.count(text)) << text;
  for (const auto& req : spy->requests) EXPECT_TRUE(req.prefix.empty());
}

TEST(RunDetection, EmptyPromptsMakeWhiteEqualBlack) {
  auto samples = small_corpus();
  for (auto& s : samples) {
    if (s.label == Label::Ai) s.prompt = "";
  }
  const auto backends = one(vtest::ngram(kTrain, 3, 0.1));
  EvalConfig cfg;
  cfg.detectors = {DetectorId::LogLikelihood, DetectorId::Entropy, DetectorId::FastNpr, DetectorId::DetectGpt};
  const auto black = run_detection(samples, cfg, backends);
  cfg.mode = Mode::White;
  const auto white = run_detection(samples, cfg, backends);
  ASSERT_EQ(black.per_sample.size(), white.per_sample.size());
  for (std::size_t i = 0; i < black.per_sample.size(); ++i) {
    EXPECT_EQ(black.per_sample[i].score, white.per_sample[i].score);
    EXPECT_EQ(black.per_sample[i].raw, white.per_sample[i].raw);
  }
}

TEST(RunDetection, ReportTotals) {
  const auto backends = one(vtest::ngram(kTrain, 3, 0.1));
  EvalConfig cfg;
  cfg.detectors.assign(std::begin(kAllDetectors), std::end(kAllDetectors));
  std::erase(cfg.detectors, DetectorId::Binoculars);
  const auto samples = small_corpus();
  const auto report = run_detection(samples, cfg, backends);
  EXPECT_EQ(report.ai_count, 3u);
  EXPECT_EQ(report.human_count, 3u);
  EXPECT_EQ(report.per_sample.size(), samples.size() * cfg.detectors.size());
  for (DetectorId id : cfg.detectors) {
    std::set<std::string> ids;
    for (const auto& r : report.per_sample) {
      if (r.detector != id) continue;
      EXPECT_TRUE(std::isfinite(r.score));
      EXPECT_TRUE(ids.insert(r.id).second);
    }
    EXPECT_EQ(ids.size(), samples.size());
  }
  ASSERT_EQ(report.summary.size(), cfg.detectors.size());
  for (const auto& s : report.summary) {
    EXPECT_GE(s.auc, 0.0);
    EXPECT_LE(s.auc, 1.0);
  }
}

TEST(RunDetection, ParallelMatchesSequential) {
  const auto backends = one(vtest::ngram(kTrain, 3, 0.1));
  EvalConfig cfg;
  cfg.detectors = {DetectorId::DetectGpt, DetectorId::FastDetectGpt, DetectorId::Npr, DetectorId::Rank};
  cfg.seed = 9;
  const auto samples = small_corpus();
  const auto seq = report_json(run_detection(samples, cfg, backends));
  cfg.jobs = 4;
  EXPECT_EQ(report_json(run_detection(samples, cfg, backends)), seq);
  EXPECT_EQ(report_json(run_detection(samples, cfg, backends)), seq);
  cfg.seed = 10;
  EXPECT_NE(report_json(run_detection(samples, cfg, backends)), seq);
}

TEST(RunDetection, PreflightErrors) {
  const auto ngram = vtest::ngram(kTrain, 3, 0.1);
  auto samples = small_corpus();
  EvalConfig cfg;
  cfg.detectors = {DetectorId::LogLikelihood};
  cfg.mode = Mode::White;
  samples[4].prompt.reset();
  EXPECT_ERROR(MissingPrompt, run_detection(samples, cfg, one(ngram)));
  cfg.mode = Mode::Black;
  EXPECT_NO_THROW(run_detection(samples, cfg, one(ngram)));

  cfg.detectors = {DetectorId::Binoculars};
  EXPECT_ERROR(ConfigError, run_detection(samples, cfg, one(ngram)));
  cfg.detectors = {DetectorId::Rank};
  EXPECT_ERROR(ConfigError, run_detection(samples, cfg, {ngram, ngram}));
  cfg.detectors = {DetectorId::Binoculars};
  EXPECT_ERROR(VocabMismatch, run_detection(samples, cfg, {ngram, vtest::ngram({"x y"})}));

  StreamFile f;
  const auto d = Distribution::sparse({{0, std::log(0.5)}}, 0.5, 2);
  f.records.push_back({DistributionStream(StreamKind::TopK, {d}, 1), std::vector<TokenId>{0, 1}});
  const auto replay = std::make_shared<ReplayBackend>(f);
  for (DetectorId id : {DetectorId::Entropy, DetectorId::Rank, DetectorId::LogRank, DetectorId::Lrr,
                        DetectorId::Npr, DetectorId::FastDetectGpt, DetectorId::DetectGpt}) {
    cfg.detectors = {id};
    EXPECT_ERROR(CapabilityError, run_detection(samples, cfg, one(replay))) << to_string(id);
  }
  cfg.detectors = {DetectorId::FastDetectGpt};
  cfg.detector.k = 1;
  EXPECT_ERROR(ConfigError, run_detection(samples, cfg, one(ngram)));
}

TEST(RunDetection, ReportFormats) {
  const auto backends = one(vtest::ngram(kTrain, 3, 0.1));
  EvalConfig cfg;
  cfg.detectors = {DetectorId::Entropy};
  cfg.threshold = -1.0;
  const auto report = run_detection(small_corpus(), cfg, backends);
  const auto json = report_json(report);
  EXPECT_NE(json.find("\"per_sample\""), std::string::npos);
  EXPECT_NE(json.find("\"summary\""), std::string::npos);
  EXPECT_NE(json.find("\"predicted\""), std::string::npos);
  std::ostringstream csv;
  write_report_csv(csv, report);
  std::istringstream lines(csv.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  EXPECT_EQ(count, 1 + 6);
}

TEST(Sweep, GridShapeAndReuse) {
  const auto spy = std::make_shared<vtest::SpyBackend>(vtest::ngram(kTrain, 3, 0.1));
  EvalConfig cfg;
  cfg.detectors = {DetectorId::FastDetectGpt, DetectorId::FastNpr};
  const std::vector<double> rates{0.1, 1.0};
  const std::vector<std::size_t> sizes{5, 10};
  const auto samples = small_corpus();
  const auto r = sweep(samples, cfg, one(spy), rates, sizes);
  ASSERT_EQ(r.rows.size(), 8u);
  EXPECT_EQ(r.rows[0].k, 5u);
  EXPECT_EQ(r.rows[0].rate, 0.1);
  EXPECT_EQ(r.rows[1].rate, 1.0);
  EXPECT_EQ(r.rows[2].k, 10u);
  EXPECT_EQ(r.rows[4].detector, DetectorId::FastNpr);
  // One scoring pass per sample for the whole grid.
  EXPECT_EQ(spy->requests.size(), samples.size());
  std::ostringstream table;
  write_sweep_table(table, r);
  EXPECT_EQ(table.str().substr(0, 6), "Method");
  EXPECT_NE(table.str().find("100%"), std::string::npos);
}

TEST(Sweep, CellsMatchSingleRuns) {
  const auto backends = one(vtest::ngram(kTrain, 3, 0.1));
  EvalConfig cfg;
  cfg.detectors = {DetectorId::DetectGpt};
  cfg.seed = 4;
  const std::vector<double> rates{0.2, 0.5};
  const std::vector<std::size_t> sizes{3};
  const auto samples = small_corpus();
  const auto r = sweep(samples, cfg, backends, rates, sizes);
  for (const auto& row : r.rows) {
    EvalConfig single = cfg;
    single.detector.rate = row.rate;
    single.detector.k = row.k;
    EXPECT_EQ(run_detection(samples, single, backends).summary[0].auc, row.auc);
  }
  cfg.detectors = {DetectorId::Rank};
  EXPECT_ERROR(ConfigError, sweep(samples, cfg, backends, rates, sizes));
}

TEST(Synth, CorpusShapeAndDeterminism) {
  const auto world = make_world(WorldSpec{.content_words = 50, .doc_length = 30, .training_documents = 200,
                                          .human_documents = 20, .human_lead = 10},
                                5);
  EXPECT_EQ(world.training.size(), 200u);
  EXPECT_EQ(world.human.size(), 20u);
  const auto gen = std::make_shared<NgramBackend>(NgramBackend::from_lines(world.training, {3, 0.01}));
  const std::vector<std::string> templates{"summarize: {text}", "again"};
  const auto a = synth_corpus(*gen, world.human, templates, 8, 12, 3);
  const auto b = synth_corpus(*gen, world.human, templates, 8, 12, 3);
  std::ostringstream sa, sb;
  write_corpus(sa, a);
  write_corpus(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  ASSERT_EQ(a.size(), 16u);
  std::set<std::string> human_texts;
  for (const auto& s : a) {
    if (s.label == Label::Human) {
      EXPECT_FALSE(s.prompt);
      human_texts.insert(s.text);
    }
  }
  for (const auto& s : a) {
    if (s.label != Label::Ai) continue;
    ASSERT_TRUE(s.prompt);
    EXPECT_EQ(split_words(s.text).size(), 12u);
    // Prompt material never doubles as a human sample.
    for (const auto& h : human_texts) EXPECT_EQ(s.prompt->find(h), std::string::npos);
  }
  EXPECT_EQ(*a[8].prompt, fill_template("summarize: {text}", world.human[8]));
  EXPECT_EQ(*a[9].prompt, fill_template("again", world.human[9]));
  EXPECT_EQ(fill_template("again", "doc"), "again doc");
  EXPECT_ERROR(InsufficientData, synth_corpus(*gen, world.human, templates, 11, 12, 3));
  EXPECT_ERROR(ConfigError, synth_corpus(*gen, world.human, templates, 4, 12, 3, 0.0));
}

TEST(Synth, WorldIsSeeded) {
  const WorldSpec spec{.content_words = 40, .doc_length = 20, .training_documents = 30, .human_documents = 5};
  EXPECT_EQ(make_world(spec, 1).training, make_world(spec, 1).training);
  EXPECT_NE(make_world(spec, 1).training, make_world(spec, 2).training);
  WorldSpec bad = spec;
  bad.human_dialect = 0.8;
  bad.human_dialect_spread = 0.5;
  EXPECT_ERROR(ConfigError, make_world(bad, 1));
}

TEST(Synth, WhiteBoxLogLikelihoodNearCeiling) {
  const auto world = make_world(WorldSpec{.content_words = 200, .training_documents = 1500, .human_documents = 120},
                                3);
  const auto gen = std::make_shared<NgramBackend>(NgramBackend::from_lines(world.training, {3, 1e-6, 1.0, 6.0}));
  const auto corpus = synth_corpus(*gen, world.human, {}, 60, 60, 1);
  EvalConfig cfg;
  cfg.mode = Mode::White;
  cfg.detectors = {DetectorId::LogLikelihood};
  EXPECT_GE(run_detection(corpus, cfg, one(gen)).summary[0].auc, 0.9);
}

TEST(Synth, BinocularsFavorsSampledText) {
  const auto world = make_world(WorldSpec{.content_words = 200, .training_documents = 1200, .human_documents = 80},
                                4);
  const std::vector<std::string> first(world.training.begin(), world.training.begin() + 600);
  const std::vector<std::string> second(world.training.begin() + 600, world.training.end());
  const auto vocab = std::make_shared<const Vocabulary>(Vocabulary::build(world.training));
  const auto m1 = std::make_shared<NgramBackend>(NgramBackend::from_lines(vocab, first, {2, 0.01}));
  const auto m2 = std::make_shared<NgramBackend>(NgramBackend::from_lines(vocab, second, {2, 0.01}));
  const auto corpus = synth_corpus(*m1, world.human, {}, 40, 60, 2);
  EvalConfig cfg;
  cfg.detectors = {DetectorId::Binoculars};
  EXPECT_GT(run_detection(corpus, cfg, {m1, m2}).summary[0].auc, 0.5);
}
