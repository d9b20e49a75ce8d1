#pragma once

#include <string>

namespace drafto {

/// Log verbosity, set once from the DRAFTO_LOG environment variable
/// (debug | info | warn | error | off); defaults to warn.
enum class LogLevel { Debug = 0, Info, Warn, Error, Off };

LogLevel log_level();
void set_log_level(LogLevel level);

void log_message(LogLevel level, const std::string& msg);

inline void log_debug(const std::string& msg) { log_message(LogLevel::Debug, msg); }
inline void log_info(const std::string& msg) { log_message(LogLevel::Info, msg); }
inline void log_warn(const std::string& msg) { log_message(LogLevel::Warn, msg); }
inline void log_error(const std::string& msg) { log_message(LogLevel::Error, msg); }

}  // namespace drafto
