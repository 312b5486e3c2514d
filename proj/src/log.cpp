#include "vceval/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string_view>

namespace vceval {

std::shared_ptr<spdlog::logger> logger() {
  static const std::shared_ptr<spdlog::logger> instance = [] {
    auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
    auto log = std::make_shared<spdlog::logger>("vceval", sink);
    log->set_pattern("[%l] %v");
    auto level = spdlog::level::err;
    if (const char* env = std::getenv("VCEVAL_LOG")) {
      const std::string_view v(env);
      if (v == "info") level = spdlog::level::info;
      else if (v == "debug") level = spdlog::level::debug;
    }
    log->set_level(level);
    return log;
  }();
  return instance;
}

}  // namespace vceval
