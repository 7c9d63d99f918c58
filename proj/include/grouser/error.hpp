#pragma once

#include <stdexcept>
#include <string>

namespace grouser {

enum class ErrorCode {
  Domain,          // argument outside the mathematical domain
  Range,           // query outside a tabulated or physical span
  Config,          // invalid configuration, rejected before any work
  Data,            // malformed or physically invalid input data
  Fit,             // insufficient or degenerate regression input
  Extrapolation,   // query outside the span of a curve
  Encode,          // field out of range for the wire format
  Corrupt,         // checksum mismatch
  Version,         // unknown wire/log version
  Sync,            // missing sync marker
  Io,              // storage failure
  Fault,           // runtime fault (non-finite input, encoder desync)
  Incomplete,      // metric requested from an incomplete trial
  EmptyAggregate,  // no completed trials to aggregate
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define GROUSER_REQUIRE(cond, code, msg)             \
  do {                                               \
    if (!(cond)) throw ::grouser::Error((code), (msg)); \
  } while (0)

}  // namespace grouser
