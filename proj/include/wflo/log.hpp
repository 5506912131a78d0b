#pragma once

#include <atomic>
#include <iostream>
#include <string_view>

namespace wflo::log {

enum class Level { Quiet = 0, Warn = 1, Info = 2 };

inline std::atomic<Level>& level() {
  static std::atomic<Level> current{Level::Warn};
  return current;
}

inline void warn(std::string_view msg) {
  if (level().load() >= Level::Warn) std::cerr << "warning: " << msg << '\n';
}

inline void info(std::string_view msg) {
  if (level().load() >= Level::Info) std::cerr << msg << '\n';
}

}  // namespace wflo::log
