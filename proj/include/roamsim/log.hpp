#pragma once

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace roamsim {

enum class LogLevel { error = 0, info = 1, debug = 2 };

/// Minimal leveled logger writing to standard error.
class Logger {
 public:
  explicit Logger(LogLevel level = LogLevel::error) : level_(level) {}

  /// Level from ROAMSIM_LOG={error|info|debug}; anything else means error.
  static Logger from_env() {
    const char* v = std::getenv("ROAMSIM_LOG");
    if (!v) return Logger(LogLevel::error);
    const std::string_view s(v);
    if (s == "debug") return Logger(LogLevel::debug);
    if (s == "info") return Logger(LogLevel::info);
    return Logger(LogLevel::error);
  }

  bool enabled(LogLevel l) const { return static_cast<int>(l) <= static_cast<int>(level_); }

  void log(LogLevel l, std::string_view msg) const {
    if (!enabled(l)) return;
    static constexpr std::string_view names[] = {"error", "info", "debug"};
    std::cerr << '[' << names[static_cast<int>(l)] << "] " << msg << '\n';
  }
  void error(std::string_view msg) const { log(LogLevel::error, msg); }
  void info(std::string_view msg) const { log(LogLevel::info, msg); }
  void debug(std::string_view msg) const { log(LogLevel::debug, msg); }

 private:
  LogLevel level_;
};

}  // namespace roamsim
