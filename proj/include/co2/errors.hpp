#pragma once

#include <stdexcept>
#include <string>

namespace co2 {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text; positions are 1-based.
struct ParseError : Error {
  ParseError(const std::string& msg, int line, int col)
      : Error(msg + " (line " + std::to_string(line) + ", col " + std::to_string(col) + ")"),
        line(line), col(col) {}
  int line = 0;
  int col = 0;
};

// An operation was called outside its stated domain.
struct PreconditionError : Error {
  using Error::Error;
};

// A theorem-backed search failed or an internal invariant broke.
struct InternalError : Error {
  using Error::Error;
};

// Exploration exceeded the configured state cap.
struct CapExceeded : Error {
  using Error::Error;
};

// A fixed-script replay referenced a step that is not enabled.
struct ScriptError : Error {
  using Error::Error;
};

}  // namespace co2
