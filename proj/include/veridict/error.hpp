#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace veridict {

enum class ErrorKind {
  InputTooShort,
  InvalidToken,
  InvalidDistribution,
  VocabMismatch,
  LengthMismatch,
  BackendUnavailable,
  CapabilityError,
  EmptyCorpus,
  ConfigError,
  ReplacementError,
  TruncationError,
  NonFiniteScore,
  ParseError,
  MissingPrompt,
  InsufficientData,
  IoError,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries one of the kinds above so the
// CLI and the tests can match on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  bool retryable() const noexcept { return kind_ == ErrorKind::BackendUnavailable; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ReplacementError : public Error {
 public:
  ReplacementError(std::size_t position, const std::string& message);
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace veridict
