#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sparsetf {

// A phase function that is not strictly increasing, or that the θ-grid
// cannot resolve.
class InvalidPhase : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The envelope (a, b) of a component vanished, so arctan(b/a) is undefined.
class DegenerateEnvelope : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace sparsetf
