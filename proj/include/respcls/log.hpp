#pragma once

#include <string>

namespace respcls {

enum class LogLevel { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

// Verbosity is controlled by the RESPCLS_LOG environment variable
// (quiet|warn|info|debug); defaults to info.
LogLevel log_level();

void log_warn(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace respcls
