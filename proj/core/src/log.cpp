#include "stgt/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace stgt::log {

namespace {

Level parse_env() {
    const char* v = std::getenv("STGT_LOG");
    if (!v) return Level::Info;
    if (!std::strcmp(v, "debug")) return Level::Debug;
    if (!std::strcmp(v, "info")) return Level::Info;
    if (!std::strcmp(v, "warn")) return Level::Warn;
    if (!std::strcmp(v, "error")) return Level::Error;
    if (!std::strcmp(v, "off")) return Level::Off;
    return Level::Info;
}

Level& threshold_ref() {
    static Level level = parse_env();
    return level;
}

const char* tag(Level level) {
    switch (level) {
        case Level::Debug: return "debug";
        case Level::Info: return "info";
        case Level::Warn: return "warn";
        case Level::Error: return "error";
        default: return "?";
    }
}

} // namespace

Level threshold() { return threshold_ref(); }

void set_threshold(Level level) { threshold_ref() = level; }

void emit(Level level, const std::string& message) {
    if (level < threshold_ref()) return;
    std::fprintf(stderr, "[%s] %s\n", tag(level), message.c_str());
}

} // namespace stgt::log
