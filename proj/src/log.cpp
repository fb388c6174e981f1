// Copyright 2026 The umstk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "umstk/log.hpp"

#include <cstdlib>
#include <memory>
#include <string_view>

#include <spdlog/sinks/stdout_sinks.h>

namespace umstk {

namespace {

spdlog::level::level_enum level_from_env()
{
  const char* value = std::getenv("UMSTK_LOG");
  if (value == nullptr) {
    return spdlog::level::err;
  }
  std::string_view v{value};
  if (v == "debug") {
    return spdlog::level::debug;
  }
  if (v == "info") {
    return spdlog::level::info;
  }
  return spdlog::level::err;
}

}  // namespace

spdlog::logger& log()
{
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto sink = std::make_shared<spdlog::sinks::stderr_sink_st>();
    auto logger = std::make_shared<spdlog::logger>("umstk", sink);
    logger->set_level(level_from_env());
    logger->set_pattern("[%l] %v");
    return logger;
  }();
  return *instance;
}

}  // namespace umstk
