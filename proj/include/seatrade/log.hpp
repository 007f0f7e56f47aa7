#pragma once

#include <cstdlib>
#include <memory>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace seatrade {

/// Process-wide stderr logger. Level comes from SEATRADE_LOG (error|warn|info|debug), default info.
inline spdlog::logger& log() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::stderr_logger_st("seatrade");
    l->set_pattern("[%l] %v");
    const char* env = std::getenv("SEATRADE_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
    return l;
  }();
  return *instance;
}

}  // namespace seatrade
