#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace latermbr {

// Token ids are dense non-negative integers drawn from a model vocabulary.
using Token = int32_t;
using TokenSeq = std::vector<Token>;

// Thrown when an operation receives input violating its preconditions
// (empty sequences, out-of-vocabulary ids, dimension mismatches, ...).
struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown by file readers; carries the 1-based line number of the offending record.
struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, size_t line_no)
      : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"),
        line(line_no) {}
  size_t line;
};

// Thrown when decoding cannot produce an output (e.g. no hypothesis ever finished).
struct DecodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when an optimizer produces non-finite values.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace latermbr
