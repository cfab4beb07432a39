#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "veridict/backend.hpp"
#include "veridict/ngram.hpp"
#include "veridict/remote.hpp"

namespace veridict {

// ngram:<corpus>[:order[:alpha[:cache_weight[:cache_prior]]]] | replay:<stream-file> | remote:[<url>]
// An empty remote url falls back to VERIDICT_BACKEND_URL.
struct BackendSpec {
  enum class Kind { Ngram, Replay, Remote };
  Kind kind = Kind::Ngram;
  std::string path;  // corpus, stream file or url
  NgramOptions ngram;
};

BackendSpec parse_backend_spec(std::string_view spec);

// Builds the backends in order. All ngram backends share one vocabulary
// built from all their corpora, so they can be paired. `remote_base`
// supplies timeout/top_k defaults for remote backends.
std::vector<std::shared_ptr<const Backend>> make_backends(std::span<const std::string> specs,
                                                          const std::optional<RemoteConfig>& remote_base = {});

std::vector<std::string> read_lines(const std::string& path);

}  // namespace veridict
