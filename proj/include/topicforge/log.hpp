#pragma once

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <memory>
#include <string>

namespace topicforge {

/// Maps TOPICFORGE_LOG (error, info, debug) to a level; unset means info.
inline spdlog::level::level_enum log_level_from_env() {
  const char* v = std::getenv("TOPICFORGE_LOG");
  if (!v) return spdlog::level::info;
  const std::string s(v);
  if (s == "error") return spdlog::level::err;
  if (s == "debug") return spdlog::level::debug;
  return spdlog::level::info;
}

/// Shared stderr logger.
inline std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = std::make_shared<spdlog::logger>("topicforge", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    l->set_level(log_level_from_env());
    return l;
  }();
  return instance;
}

}  // namespace topicforge
