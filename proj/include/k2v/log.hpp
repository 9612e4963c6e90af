#pragma once

#include <memory>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace k2v {

// Library-wide logger. Writes to stderr so machine output on stdout stays clean.
inline std::shared_ptr<spdlog::logger> logger() {
    static std::shared_ptr<spdlog::logger> instance = [] {
        if (auto existing = spdlog::get("k2v")) return existing;
        auto created = spdlog::stderr_logger_mt("k2v");
        created->set_pattern("[%l] %v");
        return created;
    }();
    return instance;
}

} // namespace k2v
