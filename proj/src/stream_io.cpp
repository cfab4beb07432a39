#include "veridict/stream_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

namespace veridict {

using nlohmann::ordered_json;

namespace {

std::size_t first_position(const StreamRecord& r) {
  if (r.tokens) {
    return scored_positions(ScoringRequest{r.prefix_tokens, *r.tokens}).front();
  }
  return r.prefix_tokens.empty() ? 2 : r.prefix_tokens.size() + 1;
}

const std::set<std::string> kHeaderKeys = {"version", "C", "kind", "k", "token_count", "tokens",
                                           "prefix_tokens", "id", "text", "prompt"};
const std::set<std::string> kPositionKeys = {"position", "entries", "rest_mass"};

void warn_unknown(const ordered_json& j, const std::set<std::string>& known, std::size_t line,
                  std::vector<std::string>& warnings) {
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) {
      warnings.push_back("line " + std::to_string(line) + ": unknown field '" + key + "'");
    }
  }
}

template <typename T>
T get_field(const ordered_json& j, const char* key, std::size_t line) {
  if (!j.contains(key)) throw ParseError(line, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line, std::string("bad field '") + key + "': " + e.what());
  }
}

struct PendingStream {
  StreamRecord record;
  StreamKind kind = StreamKind::Full;
  std::size_t vocab = 0;
  std::size_t top_k = 0;
  std::size_t expected = 0;
  std::size_t header_line = 0;
  std::vector<Distribution> positions;
};

void finish(PendingStream& p, StreamFile& file) {
  if (p.positions.size() != p.expected) {
    fail(ErrorKind::LengthMismatch, "stream starting at line " + std::to_string(p.header_line) +
                                        " declares " + std::to_string(p.expected) + " positions but has " +
                                        std::to_string(p.positions.size()));
  }
  p.record.stream = DistributionStream(p.kind, std::move(p.positions), p.top_k);
  file.records.push_back(std::move(p.record));
}

}  // namespace

void write_stream(std::ostream& out, const StreamRecord& record) {
  const auto& stream = record.stream;
  if (record.tokens) {
    const ScoringRequest req{record.prefix_tokens, *record.tokens};
    if (scored_count(req) != stream.size()) {
      fail(ErrorKind::LengthMismatch, "stream length does not match its tokens");
    }
  }
  ordered_json header;
  header["version"] = kStreamFormatVersion;
  header["C"] = stream.vocab_size();
  header["kind"] = stream.full() ? "full" : "top_k";
  if (!stream.full()) header["k"] = stream.top_k();
  header["token_count"] = stream.size();
  if (record.tokens) header["tokens"] = *record.tokens;
  if (!record.prefix_tokens.empty()) header["prefix_tokens"] = record.prefix_tokens;
  if (record.id) header["id"] = *record.id;
  if (record.text) header["text"] = *record.text;
  if (record.prompt) header["prompt"] = *record.prompt;
  out << header.dump() << '\n';

  std::size_t pos = stream.size() ? first_position(record) : 0;
  for (const auto& d : stream.positions()) {
    ordered_json rec;
    rec["position"] = pos++;
    auto entries = ordered_json::array();
    if (d.is_dense()) {
      const auto lps = d.logprobs();
      for (std::size_t t = 0; t < lps.size(); ++t) {
        entries.push_back(ordered_json::array({t, floored_logprob(lps[t])}));
      }
      rec["entries"] = std::move(entries);
      rec["rest_mass"] = 0.0;
    } else {
      for (const auto& e : d.entries()) entries.push_back(ordered_json::array({e.id, floored_logprob(e.logprob)}));
      rec["entries"] = std::move(entries);
      rec["rest_mass"] = d.rest_mass();
    }
    out << rec.dump() << '\n';
  }
}

StreamFile read_streams(std::istream& in) {
  StreamFile file;
  std::optional<PendingStream> pending;
  std::string line;
  std::size_t line_no = 0;
  std::size_t next_position = 0;
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

    if (j.contains("version")) {
      if (pending) finish(*pending, file);
      pending.emplace();
      auto& p = *pending;
      p.header_line = line_no;
      warn_unknown(j, kHeaderKeys, line_no, file.warnings);
      if (get_field<int>(j, "version", line_no) != kStreamFormatVersion) {
        throw ParseError(line_no, "unsupported stream format version");
      }
      p.vocab = get_field<std::size_t>(j, "C", line_no);
      if (p.vocab == 0) throw ParseError(line_no, "C must be positive");
      const auto kind = get_field<std::string>(j, "kind", line_no);
      if (kind == "full") {
        p.kind = StreamKind::Full;
      } else if (kind == "top_k") {
        p.kind = StreamKind::TopK;
        p.top_k = get_field<std::size_t>(j, "k", line_no);
      } else {
        throw ParseError(line_no, "kind must be 'full' or 'top_k'");
      }
      p.expected = get_field<std::size_t>(j, "token_count", line_no);
      if (j.contains("tokens")) p.record.tokens = get_field<std::vector<TokenId>>(j, "tokens", line_no);
      if (j.contains("prefix_tokens")) {
        p.record.prefix_tokens = get_field<std::vector<TokenId>>(j, "prefix_tokens", line_no);
      }
      if (j.contains("id")) p.record.id = get_field<std::string>(j, "id", line_no);
      if (j.contains("text")) p.record.text = get_field<std::string>(j, "text", line_no);
      if (j.contains("prompt")) p.record.prompt = get_field<std::string>(j, "prompt", line_no);
      if (p.record.tokens) {
        validate_tokens(*p.record.tokens, p.vocab);
        validate_tokens(p.record.prefix_tokens, p.vocab);
        if (scored_count(ScoringRequest{p.record.prefix_tokens, *p.record.tokens}) != p.expected) {
          fail(ErrorKind::LengthMismatch,
               "line " + std::to_string(line_no) + ": token_count disagrees with tokens");
        }
      }
      next_position = first_position(p.record);
      continue;
    }

    if (!pending) throw ParseError(line_no, "position record before any header");
    auto& p = *pending;
    warn_unknown(j, kPositionKeys, line_no, file.warnings);
    if (p.positions.size() == p.expected) {
      fail(ErrorKind::LengthMismatch,
           "line " + std::to_string(line_no) + ": more position records than token_count");
    }
    const auto position = get_field<std::size_t>(j, "position", line_no);
    if (position != next_position) {
      throw ParseError(line_no, "expected position " + std::to_string(next_position) + ", got " +
                                    std::to_string(position));
    }
    ++next_position;
    const auto raw = get_field<std::vector<std::pair<TokenId, double>>>(j, "entries", line_no);
    const auto rest = get_field<double>(j, "rest_mass", line_no);
    for (const auto& [id, lp] : raw) {
      if (!std::isfinite(lp)) throw ParseError(line_no, "non-finite logprob");
      if (id >= p.vocab) fail(ErrorKind::VocabMismatch, "line " + std::to_string(line_no) + ": token id >= C");
    }
    try {
      if (p.kind == StreamKind::Full) {
        if (raw.size() != p.vocab) throw ParseError(line_no, "full record must list all C tokens");
        std::vector<double> lps(p.vocab, 0.0);
        std::vector<bool> seen(p.vocab, false);
        bool ordered = true;
        for (std::size_t i = 0; i < raw.size(); ++i) {
          const auto [id, lp] = raw[i];
          if (seen[id]) throw ParseError(line_no, "duplicate token id");
          seen[id] = true;
          lps[id] = lp;
          ordered = ordered && id == i;
        }
        if (!ordered) file.warnings.push_back("line " + std::to_string(line_no) + ": entries not in id order");
        if (rest != 0.0) file.warnings.push_back("line " + std::to_string(line_no) + ": nonzero rest_mass in full record");
        p.positions.push_back(Distribution::dense(std::move(lps)));
      } else {
        if (raw.size() > p.top_k) throw ParseError(line_no, "more than k entries");
        std::vector<TokenProb> entries;
        for (const auto& [id, lp] : raw) entries.push_back({id, lp});
        auto d = Distribution::sparse(entries, rest, p.vocab);
        if (!std::equal(entries.begin(), entries.end(), d.entries().begin(), d.entries().end())) {
          file.warnings.push_back("line " + std::to_string(line_no) + ": entries not in canonical order");
        }
        p.positions.push_back(std::move(d));
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::InvalidDistribution) throw ParseError(line_no, e.what());
      throw;
    }
  }
  if (pending) finish(*pending, file);
  return file;
}

StreamFile read_stream_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open stream file '" + path + "'");
  return read_streams(in);
}

}  // namespace veridict
