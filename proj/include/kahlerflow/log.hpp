// Tiny leveled logger controlled by the KAHLERFLOW_LOG environment variable
// (error | warn | info | debug; default warn).  Messages go to stderr so CSV
// on stdout stays clean.
#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace kahlerflow::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

inline Level threshold() {
    static const Level lvl = [] {
        const char* env = std::getenv("KAHLERFLOW_LOG");
        if (!env) return Level::warn;
        if (std::strcmp(env, "error") == 0) return Level::error;
        if (std::strcmp(env, "warn") == 0) return Level::warn;
        if (std::strcmp(env, "info") == 0) return Level::info;
        if (std::strcmp(env, "debug") == 0) return Level::debug;
        std::fprintf(stderr, "[kahlerflow] unknown KAHLERFLOW_LOG value '%s', using 'warn'\n", env);
        return Level::warn;
    }();
    return lvl;
}

inline void emit(Level lvl, const char* tag, const std::string& msg) {
    if (lvl <= threshold())
        std::fprintf(stderr, "[kahlerflow %s] %s\n", tag, msg.c_str());
}

inline void error(const std::string& msg) { emit(Level::error, "error", msg); }
inline void warn(const std::string& msg) { emit(Level::warn, "warn", msg); }
inline void info(const std::string& msg) { emit(Level::info, "info", msg); }
inline void debug(const std::string& msg) { emit(Level::debug, "debug", msg); }

}  // namespace kahlerflow::log
