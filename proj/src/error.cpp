#include "grouser/error.hpp"

namespace grouser {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Domain: return "domain";
    case ErrorCode::Range: return "range";
    case ErrorCode::Config: return "config";
    case ErrorCode::Data: return "data";
    case ErrorCode::Fit: return "fit";
    case ErrorCode::Extrapolation: return "extrapolation";
    case ErrorCode::Encode: return "encode";
    case ErrorCode::Corrupt: return "corrupt";
    case ErrorCode::Version: return "version";
    case ErrorCode::Sync: return "sync";
    case ErrorCode::Io: return "io";
    case ErrorCode::Fault: return "fault";
    case ErrorCode::Incomplete: return "incomplete";
    case ErrorCode::EmptyAggregate: return "empty-aggregate";
  }
  return "unknown";
}

}  // namespace grouser
