#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace likspec {

enum class ErrorCode {
  kParse,
  kLengthMismatch,
  kDuplicateId,
  kTooShort,
  kDegenerate,
  kPairConflict,
  kInvalidArgument,
  kGridMismatch,
  kNotFitted,
  kTraining,
  kConfig,
  kIo,
  kNumeric,
};

// Process exit status for a failure class: 1 validation, 2 I/O, 3 numeric.
int exit_status(ErrorCode code);

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  int exit_status() const { return likspec::exit_status(code_); }

 private:
  ErrorCode code_;
};

// Malformed input line; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorCode::kParse,
              "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace likspec
