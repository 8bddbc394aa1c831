#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace planverify {

enum class ErrorCode {
  InvalidArgument,
  InapplicableAction,
  UnknownEntity,
  SyntaxError,
  IndexOutOfRange,
  ParamMismatch,
  UnconfirmedConstraint,
  EmptyTrace,
  LlmUnavailable,
  UnparseableLlmOutput,
  UnknownDraft,
  UnknownConstraint,
  WeightOutOfRange,
  InvalidState,
  NoConstraints,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::InapplicableAction: return "inapplicable_action";
    case ErrorCode::UnknownEntity: return "unknown_entity";
    case ErrorCode::SyntaxError: return "syntax_error";
    case ErrorCode::IndexOutOfRange: return "index_out_of_range";
    case ErrorCode::ParamMismatch: return "param_mismatch";
    case ErrorCode::UnconfirmedConstraint: return "unconfirmed_constraint";
    case ErrorCode::EmptyTrace: return "empty_trace";
    case ErrorCode::LlmUnavailable: return "llm_unavailable";
    case ErrorCode::UnparseableLlmOutput: return "unparseable_llm_output";
    case ErrorCode::UnknownDraft: return "unknown_draft";
    case ErrorCode::UnknownConstraint: return "unknown_constraint";
    case ErrorCode::WeightOutOfRange: return "weight_out_of_range";
    case ErrorCode::InvalidState: return "invalid_state";
    case ErrorCode::NoConstraints: return "no_constraints";
    case ErrorCode::Io: return "io_error";
  }
  return "unknown";
}

/// Base of every error raised by the library. The code is stable and is
/// what the service and CLI surface to callers.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Formula text could not be parsed.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, std::vector<std::string> expected,
              const std::string& found)
      : Error(ErrorCode::SyntaxError, format(offset, expected, found)),
        offset_(offset),
        expected_(std::move(expected)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  static std::string format(std::size_t offset,
                            const std::vector<std::string>& expected,
                            const std::string& found) {
    std::string msg = "syntax error at offset " + std::to_string(offset) +
                      ": found " + found + ", expected one of {";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) msg += ", ";
      msg += expected[i];
    }
    return msg + "}";
  }

  std::size_t offset_;
  std::vector<std::string> expected_;
};

class InapplicableAction : public Error {
 public:
  InapplicableAction(const std::string& message,
                     std::optional<std::size_t> step = std::nullopt)
      : Error(ErrorCode::InapplicableAction,
              step ? "step " + std::to_string(*step) + ": " + message : message),
        step_(step) {}

  std::optional<std::size_t> step() const noexcept { return step_; }

 private:
  std::optional<std::size_t> step_;
};

class UnparseableLlmOutput : public Error {
 public:
  explicit UnparseableLlmOutput(const std::string& message,
                                std::optional<std::size_t> line = std::nullopt)
      : Error(ErrorCode::UnparseableLlmOutput,
              line ? "line " + std::to_string(*line) + ": " + message : message),
        line_(line) {}

  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  std::optional<std::size_t> line_;
};

}  // namespace planverify
