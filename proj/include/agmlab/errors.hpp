#pragma once

#include <stdexcept>
#include <string>

namespace agmlab {

/// Invalid parameters or malformed input. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An enumeration, message or capacity cap was exceeded. CLI exit code 3.
class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input file violates its line-oriented format.
class FormatError : public ConfigError {
 public:
  FormatError(std::size_t line, const std::string& what)
      : ConfigError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace agmlab
