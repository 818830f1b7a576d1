// Process-wide diagnostic sink. Defaults to stderr; tests and tools may
// replace it.
#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace memattack {

enum class LogLevel { kDebug, kInfo, kWarn };

class Log {
 public:
  using Sink = std::function<void(LogLevel, std::string_view)>;

  static void set_sink(Sink sink) {
    std::lock_guard lock(state().mutex);
    state().sink = std::move(sink);
  }

  static void set_min_level(LogLevel level) {
    std::lock_guard lock(state().mutex);
    state().min_level = level;
  }

  static void write(LogLevel level, std::string_view message) {
    std::lock_guard lock(state().mutex);
    if (level < state().min_level) return;
    if (state().sink) {
      state().sink(level, message);
      return;
    }
    static constexpr std::string_view kNames[] = {"debug", "info", "warn"};
    std::cerr << "[" << kNames[static_cast<int>(level)] << "] " << message << '\n';
  }

  static void info(std::string_view m) { write(LogLevel::kInfo, m); }
  static void warn(std::string_view m) { write(LogLevel::kWarn, m); }
  static void debug(std::string_view m) { write(LogLevel::kDebug, m); }

 private:
  struct State {
    std::mutex mutex;
    Sink sink;
    LogLevel min_level = LogLevel::kWarn;
  };

  static State& state() {
    static State s;
    return s;
  }
};

}  // namespace memattack
