#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace objconf {

// Raised when an input file or record violates its schema. `line` is 1-based;
// 0 means the location is unknown.
class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

}  // namespace objconf
