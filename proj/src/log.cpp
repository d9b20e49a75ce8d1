#include "drafto/log.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <mutex>

namespace drafto {

namespace {

LogLevel level_from_env() {
  const char* env = std::getenv("DRAFTO_LOG");
  if (!env) return LogLevel::Warn;
  const std::string v(env);
  if (v == "debug") return LogLevel::Debug;
  if (v == "info") return LogLevel::Info;
  if (v == "warn") return LogLevel::Warn;
  if (v == "error") return LogLevel::Error;
  if (v == "off") return LogLevel::Off;
  return LogLevel::Warn;
}

std::atomic<LogLevel>& level_slot() {
  static std::atomic<LogLevel> level{level_from_env()};
  return level;
}

const char* tag(LogLevel level) {
  switch (level) {
    case LogLevel::Debug: return "debug";
    case LogLevel::Info: return "info";
    case LogLevel::Warn: return "warn";
    case LogLevel::Error: return "error";
    case LogLevel::Off: return "off";
  }
  return "?";
}

}  // namespace

LogLevel log_level() { return level_slot().load(); }

void set_log_level(LogLevel level) { level_slot().store(level); }

void log_message(LogLevel level, const std::string& msg) {
  if (level < log_level()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::fprintf(stderr, "[drafto %s] %s\n", tag(level), msg.c_str());
}

}  // namespace drafto
