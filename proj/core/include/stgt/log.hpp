#pragma once

#include <string>

namespace stgt::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

/// Threshold comes from the STGT_LOG env var (debug|info|warn|error|off),
/// default info. Output goes to stderr.
Level threshold();
void set_threshold(Level level);

void emit(Level level, const std::string& message);

inline void debug(const std::string& m) { emit(Level::Debug, m); }
inline void info(const std::string& m) { emit(Level::Info, m); }
inline void warn(const std::string& m) { emit(Level::Warn, m); }
inline void error(const std::string& m) { emit(Level::Error, m); }

} // namespace stgt::log
