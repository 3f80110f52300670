#pragma once

#include <stdexcept>
#include <string>

namespace cbandit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CBANDIT_DEFINE_ERROR(Name)            \
  class Name : public Error {                 \
   public:                                    \
    explicit Name(const std::string& what)    \
        : Error(#Name ": " + what) {}         \
  }

// causal-model
CBANDIT_DEFINE_ERROR(CycleDetected);
CBANDIT_DEFINE_ERROR(InvalidIntervention);
CBANDIT_DEFINE_ERROR(InstanceTooLarge);
CBANDIT_DEFINE_ERROR(InvalidInstance);

// graph-structs
CBANDIT_DEFINE_ERROR(NotAnEdge);
CBANDIT_DEFINE_ERROR(EmptyTree);
CBANDIT_DEFINE_ERROR(NotChordal);
CBANDIT_DEFINE_ERROR(NotATree);
CBANDIT_DEFINE_ERROR(CliqueTreeMismatch);

// bandit-core
CBANDIT_DEFINE_ERROR(InvalidConfig);
CBANDIT_DEFINE_ERROR(HorizonExceeded);

// instance-gen
CBANDIT_DEFINE_ERROR(GenerationTimeout);
CBANDIT_DEFINE_ERROR(IndexOutOfRange);

// harness / io
CBANDIT_DEFINE_ERROR(ConfigError);

#undef CBANDIT_DEFINE_ERROR

/// Malformed input file. Carries the 1-based line and column of the
/// offending token (0 when the position is unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error("ParseError at line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace cbandit
