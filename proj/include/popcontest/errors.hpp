#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace popcontest {

// Malformed input that cannot be interpreted at all (bad JSON, bad CSV).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input whose values break a record invariant.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Invalid parameters or configuration. `field()` names the offending setting.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace popcontest
