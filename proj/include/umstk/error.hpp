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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace umstk {

// Which part of the stack raised an error. Surfaced in CLI messages.
enum class Layer {
  kBlockDevice,
  kTransport,
  kScsi,
  kMbr,
  kFat32,
  kCli,
};

enum class ErrorKind {
  kRange,
  kIo,
  kPermission,
  kInvalidArgument,
  // transport
  kStall,
  kTransport,
  kTimeout,
  // bulk-only transport / SCSI
  kFraming,
  kProtocol,
  kPhaseError,
  kCommandFailed,
  kUnsupportedDevice,
  kNotReady,
  // partitioning
  kMalformedTable,
  kUnsupportedFormat,
  // filesystem
  kNotFat32,
  kCorruptChain,
  kNoSpace,
  kExists,
  kNotFound,
  kNotADirectory,
  kIsADirectory,
  kNotEmpty,
  kInvalidName,
  kFileTooLarge,
  kCycle,
  kExhausted,
};

std::string_view to_string(Layer layer);
std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error
{
 public:
  Error(Layer layer, ErrorKind kind, const std::string& message);

  Layer layer() const noexcept { return layer_; }
  ErrorKind kind() const noexcept { return kind_; }

 private:
  Layer layer_;
  ErrorKind kind_;
};

}  // namespace umstk
