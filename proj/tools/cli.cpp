#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "veridict/backend_spec.hpp"
#include "veridict/eval.hpp"
#include "veridict/remote.hpp"
#include "veridict/stream_io.hpp"
#include "veridict/synth.hpp"

namespace veridict {

namespace {

using nlohmann::ordered_json;

// Flag combinations that are wrong regardless of the data.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::vector<std::string> backends;
  std::string backend_config;
  std::vector<std::string> detectors;
  std::string mode = "black";
  double rate = 0.1;
  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool lenient_topk = false;
};

void add_backend_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--backend", c.backends,
                  "ngram:<corpus>[:order[:alpha[:cache_weight[:cache_prior]]]], replay:<stream-file> or remote:[<url>]; "
                  "repeat for the second binoculars model")
      ->required();
  cmd->add_option("--backend-config", c.backend_config, "JSON file with remote backend settings");
}

void add_detector_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--detectors", c.detectors, "comma-separated detector names, or 'all'")
      ->delimiter(',')
      ->required();
  cmd->add_option("--mode", c.mode, "black or white")->check(CLI::IsMember({"black", "white"}));
  cmd->add_option("--rate", c.rate, "fraction of tokens perturbed");
  cmd->add_option("--k", c.k, "perturbations per text");
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--lenient-topk", c.lenient_topk,
                "spread top-k rest mass over unlisted tokens instead of failing");
}

std::vector<DetectorId> parse_detectors(const std::vector<std::string>& names) {
  std::vector<DetectorId> out;
  for (const auto& n : names) {
    if (n == "all") {
      out.assign(std::begin(kAllDetectors), std::end(kAllDetectors));
      continue;
    }
    const DetectorId id = parse_detector(n);
    if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
  }
  return out;
}

EvalConfig eval_config(const Common& c) {
  EvalConfig cfg;
  cfg.mode = parse_mode(c.mode);
  cfg.detectors = parse_detectors(c.detectors);
  cfg.detector.rate = c.rate;
  cfg.detector.k = c.k;
  cfg.detector.strict_topk = !c.lenient_topk;
  cfg.seed = c.seed;
  cfg.jobs = c.jobs;
  return cfg;
}

BackendSet open_backends(const Common& c) {
  if (c.backends.size() > 2) throw UsageError("at most two --backend flags are accepted");
  std::optional<RemoteConfig> base;
  if (!c.backend_config.empty()) base = RemoteConfig::from_file(c.backend_config);
  const auto list = make_backends(c.backends, base);
  BackendSet set;
  set.primary = list.at(0);
  if (list.size() > 1) set.secondary = list[1];
  return set;
}

// Rejects a binoculars/backend-count mismatch before any backend is built.
void check_backend_count(const Common& c, const std::vector<DetectorId>& detectors) {
  const bool binoculars = std::find(detectors.begin(), detectors.end(), DetectorId::Binoculars) != detectors.end();
  if (binoculars && c.backends.size() != 2) throw UsageError("binoculars needs exactly two --backend flags");
  if (!binoculars && c.backends.size() != 1) throw UsageError("exactly one --backend is needed without binoculars");
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::IoError, "cannot write " + path);
  return f;
}

void write_to(const std::string& path, std::ostream& fallback, const auto& writer) {
  if (path.empty() || path == "-") {
    writer(fallback);
  } else {
    auto f = open_output(path);
    writer(f);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, end - start);
    try {
      std::size_t used = 0;
      if constexpr (std::is_floating_point_v<T>) {
        out.push_back(std::stod(item, &used));
      } else {
        if (!item.empty() && item[0] == '-') throw std::invalid_argument(item);
        out.push_back(static_cast<T>(std::stoull(item, &used)));
      }
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError(std::string("bad ") + what + " value '" + item + "'");
    }
    start = end + 1;
  }
  return out;
}

void print_error(std::ostream& err, std::string_view kind, std::string_view message) {
  ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  err << j.dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Zero-shot detection of machine-generated text"};
  app.name("veridict");
  app.require_subcommand(1);

  // score
  Common score_opts;
  std::string score_text, score_text_file, score_prompt;
  auto* score_cmd = app.add_subcommand("score", "Score one text with the selected detectors");
  add_backend_flags(score_cmd, score_opts);
  add_detector_flags(score_cmd, score_opts);
  auto* text_opt = score_cmd->add_option("--text", score_text, "text to score");
  score_cmd->add_option("--text-file", score_text_file, "file holding the text to score")->excludes(text_opt);
  score_cmd->add_option("--prompt", score_prompt, "prompt the text answers (white mode)");

  // evaluate
  Common eval_opts;
  std::string eval_corpus, eval_out, eval_csv;
  std::optional<double> eval_threshold;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a labeled corpus and report AUC per detector");
  add_backend_flags(eval_cmd, eval_opts);
  add_detector_flags(eval_cmd, eval_opts);
  eval_cmd->add_option("--corpus", eval_corpus, "JSONL corpus")->required();
  eval_cmd->add_option("--out", eval_out, "JSON report path (stdout when omitted)");
  eval_cmd->add_option("--csv", eval_csv, "per-sample CSV path");
  eval_cmd->add_option("--threshold", eval_threshold, "decision threshold on the score");

  // sweep
  Common sweep_opts;
  std::string sweep_corpus, sweep_out, sweep_rates = "0.1,0.2,0.5,1.0", sweep_sizes = "5,10";
  auto* sweep_cmd = app.add_subcommand("sweep", "AUC of perturbation detectors over rates x sizes");
  add_backend_flags(sweep_cmd, sweep_opts);
  add_detector_flags(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--corpus", sweep_corpus, "JSONL corpus")->required();
  sweep_cmd->add_option("--rates", sweep_rates, "comma-separated replacement rates");
  sweep_cmd->add_option("--sizes", sweep_sizes, "comma-separated perturbation counts");
  sweep_cmd->add_option("--out", sweep_out, "JSON result path");

  // synth
  std::vector<std::string> synth_backend;
  std::string synth_backend_config, synth_human, synth_templates, synth_out, synth_world;
  std::size_t synth_n = 200, synth_gen_len = 100;
  double synth_temperature = 1.0;
  std::uint64_t synth_seed = 0;
  auto* synth_cmd = app.add_subcommand("synth", "Build a synthetic labeled corpus or a synthetic world");
  synth_cmd->add_option("--backend", synth_backend, "generator backend spec");
  synth_cmd->add_option("--backend-config", synth_backend_config, "JSON file with remote backend settings");
  synth_cmd->add_option("--human-source", synth_human, "file with one human document per line");
  synth_cmd->add_option("--templates", synth_templates, "file with one prompt template per line");
  synth_cmd->add_option("--n", synth_n, "samples per class")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--gen-len", synth_gen_len, "generated tokens per ai sample");
  synth_cmd->add_option("--temperature", synth_temperature, "sampling temperature of the generator");
  synth_cmd->add_option("--seed", synth_seed, "master seed");
  synth_cmd->add_option("--out", synth_out, "corpus path (stdout when omitted)");
  synth_cmd->add_option("--world", synth_world,
                        "write a synthetic language to DIR/train.txt and DIR/human.txt instead");

  // export-stream
  Common export_opts;
  std::string export_text, export_prompt, export_corpus, export_out;
  auto* export_cmd = app.add_subcommand("export-stream", "Write distribution streams for texts");
  add_backend_flags(export_cmd, export_opts);
  auto* etext = export_cmd->add_option("--text", export_text, "text to export");
  export_cmd->add_option("--prompt", export_prompt, "prefix the text is conditioned on")->needs(etext);
  export_cmd->add_option("--corpus", export_corpus, "JSONL corpus; one stream per sample")->excludes(etext);
  export_cmd->add_option("--mode", export_opts.mode, "black or white (with --corpus)")
      ->check(CLI::IsMember({"black", "white"}));
  export_cmd->add_option("--out", export_out, "stream file path (stdout when omitted)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    print_error(err, "UsageError", e.what());
    return kExitUsage;
  }

  try {
    if (score_cmd->parsed()) {
      auto cfg = eval_config(score_opts);
      check_backend_count(score_opts, cfg.detectors);
      if (score_text.empty() == score_text_file.empty()) throw UsageError("give exactly one of --text, --text-file");
      if (cfg.mode == Mode::White && score_prompt.empty()) throw UsageError("white mode needs --prompt");
      LabeledSample sample{"text", score_text_file.empty() ? score_text : read_file(score_text_file),
                           cfg.mode == Mode::White ? Label::Ai : Label::Human, std::nullopt};
      if (!score_prompt.empty()) sample.prompt = score_prompt;
      const auto backends = open_backends(score_opts);
      check_run(std::span(&sample, 1), cfg, backends);
      ordered_json j = ordered_json::array();
      for (const Score& s : score_sample(sample, cfg, backends)) {
        j.push_back({{"detector", std::string(to_string(s.detector()))}, {"raw", s.raw()}, {"score", s.value()}});
      }
      out << j.dump(2) << '\n';
    } else if (eval_cmd->parsed()) {
      auto cfg = eval_config(eval_opts);
      cfg.threshold = eval_threshold;
      check_backend_count(eval_opts, cfg.detectors);
      const auto samples = load_corpus(eval_corpus);
      const auto backends = open_backends(eval_opts);
      const auto report = run_detection(samples, cfg, backends);
      write_to(eval_out, out, [&](std::ostream& o) { write_report_json(o, report); });
      if (!eval_csv.empty()) {
        auto f = open_output(eval_csv);
        write_report_csv(f, report);
      }
    } else if (sweep_cmd->parsed()) {
      auto cfg = eval_config(sweep_opts);
      check_backend_count(sweep_opts, cfg.detectors);
      const auto rates = parse_list<double>(sweep_rates, "rate");
      const auto sizes = parse_list<std::size_t>(sweep_sizes, "size");
      const auto samples = load_corpus(sweep_corpus);
      const auto backends = open_backends(sweep_opts);
      const auto result = sweep(samples, cfg, backends, rates, sizes);
      write_sweep_table(out, result);
      if (!sweep_out.empty()) {
        auto f = open_output(sweep_out);
        write_sweep_json(f, result);
      }
    } else if (synth_cmd->parsed()) {
      if (!synth_world.empty()) {
        if (!synth_backend.empty() || !synth_human.empty()) {
          throw UsageError("--world cannot be combined with --backend or --human-source");
        }
        const auto world = make_world(WorldSpec{}, synth_seed);
        std::filesystem::create_directories(synth_world);
        const std::filesystem::path dir(synth_world);
        for (const auto& [name, lines] : {std::pair{"train.txt", &world.training}, {"human.txt", &world.human}}) {
          auto f = open_output((dir / name).string());
          for (const auto& line : *lines) f << line << '\n';
        }
      } else {
        if (synth_backend.size() != 1 || synth_human.empty()) {
          throw UsageError("synth needs one --backend and --human-source (or --world)");
        }
        Common c;
        c.backends = synth_backend;
        c.backend_config = synth_backend_config;
        const auto backends = open_backends(c);
        std::vector<std::string> human;
        for (auto& line : read_lines(synth_human)) {
          if (!line.empty()) human.push_back(std::move(line));
        }
        std::vector<std::string> templates;
        if (!synth_templates.empty()) {
          for (auto& line : read_lines(synth_templates)) {
            if (!line.empty()) templates.push_back(std::move(line));
          }
        }
        const auto corpus = synth_corpus(*backends.primary, human, templates, synth_n, synth_gen_len, synth_seed,
                                         synth_temperature);
        write_to(synth_out, out, [&](std::ostream& o) { write_corpus(o, corpus); });
      }
    } else if (export_cmd->parsed()) {
      if (export_opts.backends.size() != 1) throw UsageError("export-stream takes exactly one --backend");
      if (export_text.empty() == export_corpus.empty()) throw UsageError("give exactly one of --text, --corpus");
      const Mode mode = parse_mode(export_opts.mode);
      std::vector<LabeledSample> samples;
      if (!export_corpus.empty()) {
        samples = load_corpus(export_corpus);
        if (mode == Mode::White) {
          for (const auto& s : samples) {
            if (s.label == Label::Ai && !s.prompt) {
              fail(ErrorKind::MissingPrompt, "white-box mode needs a prompt on ai sample '" + s.id + "'");
            }
          }
        }
      }
      const auto backends = open_backends(export_opts);
      const auto& backend = *backends.primary;
      write_to(export_out, out, [&](std::ostream& o) {
        auto emit = [&](const ScoringRequest& req, std::optional<std::string> id, std::optional<std::string> text,
                        std::optional<std::string> prompt) {
          StreamRecord rec{backend.score(req), req.body, req.prefix, std::move(id), std::move(text),
                           std::move(prompt)};
          write_stream(o, rec);
        };
        if (!export_text.empty()) {
          ScoringRequest req;
          if (!export_prompt.empty()) req.prefix = backend.encode(export_prompt);
          req.body = backend.encode(export_text);
          emit(req, std::nullopt, export_text,
               export_prompt.empty() ? std::nullopt : std::optional<std::string>(export_prompt));
        } else {
          for (const auto& s : samples) {
            const auto req = build_request(s, mode, backend);
            const bool prompted = !req.prefix.empty() || (mode == Mode::White && s.label == Label::Ai);
            emit(req, s.id, s.text, prompted ? s.prompt : std::nullopt);
          }
        }
      });
    }
  } catch (const UsageError& e) {
    print_error(err, "UsageError", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    print_error(err, to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::ConfigError ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    print_error(err, "RuntimeError", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace veridict
