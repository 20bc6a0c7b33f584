#pragma once

#include <stdexcept>
#include <string>

namespace spinread {

enum class ErrorKind {
  Shape,
  Domain,
  DegenerateBoundary,
  DegenerateTraining,
  Divergence,
  FitFailure,
  State,
  Parse,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base of every error thrown by the library. The kind maps one-to-one onto
/// the C API status codes.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

// Convenience throwers, one per kind.
[[noreturn]] void throw_shape(const std::string& what);
[[noreturn]] void throw_domain(const std::string& what);
[[noreturn]] void throw_degenerate_boundary(const std::string& what);

/// Parse failure carrying the 1-based line number of the offending input.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what),
        line_(line),
        detail_(what) {}

  std::size_t line() const noexcept { return line_; }
  /// The message without the line prefix.
  const std::string& detail() const noexcept { return detail_; }

private:
  std::size_t line_;
  std::string detail_;
};

}  // namespace spinread
