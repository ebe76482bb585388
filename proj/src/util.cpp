#include "fuzconv/util.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace fuzconv {

LogLevel log_threshold() {
    static LogLevel level = [] {
        const char* env = std::getenv("FUZCONV_LOG");
        if (env == nullptr) return LogLevel::Info;
        if (std::strcmp(env, "error") == 0) return LogLevel::Error;
        if (std::strcmp(env, "warn") == 0) return LogLevel::Warn;
        if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
        return LogLevel::Info;
    }();
    return level;
}

void log(LogLevel level, const std::string& msg) {
    if (level > log_threshold()) return;
    const char* tag = "info";
    switch (level) {
        case LogLevel::Error: tag = "error"; break;
        case LogLevel::Warn: tag = "warn"; break;
        case LogLevel::Info: tag = "info"; break;
        case LogLevel::Debug: tag = "debug"; break;
    }
    std::fprintf(stderr, "[fuzconv %s] %s\n", tag, msg.c_str());
}

std::string to_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

} // namespace fuzconv
