#include "veridict/error.hpp"

namespace veridict {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InputTooShort: return "InputTooShort";
    case ErrorKind::InvalidToken: return "InvalidToken";
    case ErrorKind::InvalidDistribution: return "InvalidDistribution";
    case ErrorKind::VocabMismatch: return "VocabMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::BackendUnavailable: return "BackendUnavailable";
    case ErrorKind::CapabilityError: return "CapabilityError";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::ReplacementError: return "ReplacementError";
    case ErrorKind::TruncationError: return "TruncationError";
    case ErrorKind::NonFiniteScore: return "NonFiniteScore";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingPrompt: return "MissingPrompt";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + message), line_(line) {}

ReplacementError::ReplacementError(std::size_t position, const std::string& message)
    : Error(ErrorKind::ReplacementError, "position " + std::to_string(position) + ": " + message),
      position_(position) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace veridict
