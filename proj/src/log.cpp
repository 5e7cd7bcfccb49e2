#include "respcls/log.hpp"

#include <cstdlib>
#include <iostream>
#include <string_view>

namespace respcls {

static LogLevel parse_level(const char* s) {
  if (s == nullptr) return LogLevel::Info;
  std::string_view v(s);
  if (v == "quiet") return LogLevel::Quiet;
  if (v == "warn") return LogLevel::Warn;
  if (v == "info") return LogLevel::Info;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

LogLevel log_level() {
  static LogLevel level = parse_level(std::getenv("RESPCLS_LOG"));
  return level;
}

void log_warn(const std::string& msg) {
  if (log_level() >= LogLevel::Warn) std::cerr << "[warn] " << msg << "\n";
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::cerr << "[info] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::Debug) std::cerr << "[debug] " << msg << "\n";
}

}  // namespace respcls
