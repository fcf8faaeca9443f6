#pragma once

#include <stdexcept>
#include <string>

namespace bnu {

// Distribution or sampler called with a parameter outside its domain.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller broke a precondition (shape mismatch, point off the simplex, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Bad user data or configuration. The CLI maps this to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, long line, const std::string& source = {})
      : InputError((source.empty() ? "" : source + ": ") +
                   (line > 0 ? "line " + std::to_string(line) + ": " : "") + what),
        line_(line) {}

  long line() const noexcept { return line_; }

 private:
  long line_;
};

}  // namespace bnu
