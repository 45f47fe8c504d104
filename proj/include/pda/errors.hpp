#pragma once

#include <stdexcept>
#include <string>

namespace pda {

struct MalformedProfileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MalformedOrderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Committed allocation breaks the item budget or names an agent outside the
// coalition.
struct InfeasibleCommittedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exhaustive enumeration would exceed the desk-scale guard.
struct OracleTooLargeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exact mode requested beyond the configured limit; callers should switch to
// sampled mode explicitly.
struct SizeLimitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Instance file problems, with field context in the message.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pda
