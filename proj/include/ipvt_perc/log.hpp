#pragma once

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace ipvt_perc {

enum class LogLevel : int { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Level comes from IPVT_PERC_LOG (error|warn|info|debug); default warn.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("IPVT_PERC_LOG");
    if (env == nullptr) return LogLevel::Warn;
    if (std::strcmp(env, "error") == 0) return LogLevel::Error;
    if (std::strcmp(env, "warn") == 0) return LogLevel::Warn;
    if (std::strcmp(env, "info") == 0) return LogLevel::Info;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    std::fprintf(stderr, "[ipvt_perc] unknown IPVT_PERC_LOG value '%s', using warn\n", env);
    return LogLevel::Warn;
  }();
  return level;
}

inline void log_at(LogLevel lvl, const char* fmt, ...) {
  if (static_cast<int>(lvl) > static_cast<int>(log_level())) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[ipvt_perc %s] ", names[static_cast<int>(lvl)]);
  std::va_list args;
  va_start(args, fmt);
  std::vfprintf(stderr, fmt, args);
  va_end(args);
  std::fputc('\n', stderr);
}

#define IPVT_PERC_LOG_ERROR(...) ::ipvt_perc::log_at(::ipvt_perc::LogLevel::Error, __VA_ARGS__)
#define IPVT_PERC_LOG_WARN(...) ::ipvt_perc::log_at(::ipvt_perc::LogLevel::Warn, __VA_ARGS__)
#define IPVT_PERC_LOG_INFO(...) ::ipvt_perc::log_at(::ipvt_perc::LogLevel::Info, __VA_ARGS__)
#define IPVT_PERC_LOG_DEBUG(...) ::ipvt_perc::log_at(::ipvt_perc::LogLevel::Debug, __VA_ARGS__)

}  // namespace ipvt_perc
