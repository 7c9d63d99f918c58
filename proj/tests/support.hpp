#pragma once

#include <optional>
#include <string>

#include "grouser/error.hpp"

namespace testing {

/// Code of the grouser::Error thrown by f, or nullopt if it returns normally.
template <class F>
std::optional<grouser::ErrorCode> error_code(F&& f) {
  try {
    f();
  } catch (const grouser::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline std::string config_path(const std::string& name) { return std::string(GROUSER_CONFIG_DIR) + "/" + name; }
inline std::string data_path(const std::string& name) { return std::string(GROUSER_DATA_DIR) + "/" + name; }

}  // namespace testing
