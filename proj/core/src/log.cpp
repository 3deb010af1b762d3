#include "owssl/log.hpp"

#include <cstdlib>
#include <iostream>

namespace owssl {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("OWSSL_LOG");
    if (!env) return LogLevel::kInfo;
    const std::string v(env);
    if (v == "quiet") return LogLevel::kQuiet;
    if (v == "warn") return LogLevel::kWarn;
    if (v == "debug") return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

namespace {
void emit(LogLevel at, const char* tag, const std::string& msg) {
  if (log_level() >= at) std::cerr << tag << msg << "\n";
}
}  // namespace

void log_warn(const std::string& msg) { emit(LogLevel::kWarn, "[warn] ", msg); }
void log_info(const std::string& msg) { emit(LogLevel::kInfo, "[info] ", msg); }
void log_debug(const std::string& msg) { emit(LogLevel::kDebug, "[debug] ", msg); }

}  // namespace owssl
