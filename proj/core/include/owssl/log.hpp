#pragma once

#include <string>

namespace owssl {

enum class LogLevel { kQuiet = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

/// Level comes from the OWSSL_LOG env var (quiet|warn|info|debug), default
/// info. Messages go to stderr so file outputs stay clean.
LogLevel log_level();

void log_warn(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace owssl
