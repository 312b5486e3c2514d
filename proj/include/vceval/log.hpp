#pragma once

#include <spdlog/logger.h>

#include <memory>

namespace vceval {

/// Shared stderr logger. Level comes from VCEVAL_LOG (error|info|debug), default error.
std::shared_ptr<spdlog::logger> logger();

}  // namespace vceval
