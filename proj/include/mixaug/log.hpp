#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace mixaug {

enum class LogLevel { debug = 0, info = 1, warn = 2, silent = 3 };

inline std::atomic<LogLevel>& log_threshold() {
  static std::atomic<LogLevel> level{LogLevel::warn};
  return level;
}

inline void log(LogLevel level, std::string_view msg) {
  if (level < log_threshold().load()) return;
  static std::mutex mu;
  static constexpr const char* kTags[] = {"debug", "info", "warn"};
  std::lock_guard lock(mu);
  std::clog << "[mixaug " << kTags[static_cast<int>(level)] << "] " << msg << '\n';
}

inline void log_info(std::string_view msg) { log(LogLevel::info, msg); }
inline void log_warn(std::string_view msg) { log(LogLevel::warn, msg); }

}  // namespace mixaug
