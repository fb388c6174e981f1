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

#include "umstk/error.hpp"

namespace umstk {

std::string_view to_string(Layer layer)
{
  switch (layer) {
    case Layer::kBlockDevice:
      return "blockdev";
    case Layer::kTransport:
      return "usb";
    case Layer::kScsi:
      return "scsi";
    case Layer::kMbr:
      return "mbr";
    case Layer::kFat32:
      return "fat32";
    case Layer::kCli:
      return "cli";
  }
  return "?";
}

std::string_view to_string(ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::kRange:
      return "range error";
    case ErrorKind::kIo:
      return "I/O error";
    case ErrorKind::kPermission:
      return "permission denied";
    case ErrorKind::kInvalidArgument:
      return "invalid argument";
    case ErrorKind::kStall:
      return "endpoint stalled";
    case ErrorKind::kTransport:
      return "transport error";
    case ErrorKind::kTimeout:
      return "timeout";
    case ErrorKind::kFraming:
      return "framing error";
    case ErrorKind::kProtocol:
      return "protocol error";
    case ErrorKind::kPhaseError:
      return "phase error";
    case ErrorKind::kCommandFailed:
      return "command failed";
    case ErrorKind::kUnsupportedDevice:
      return "unsupported device";
    case ErrorKind::kNotReady:
      return "unit not ready";
    case ErrorKind::kMalformedTable:
      return "malformed partition table";
    case ErrorKind::kUnsupportedFormat:
      return "unsupported format";
    case ErrorKind::kNotFat32:
      return "not a FAT32 volume";
    case ErrorKind::kCorruptChain:
      return "corrupt cluster chain";
    case ErrorKind::kNoSpace:
      return "no space left on volume";
    case ErrorKind::kExists:
      return "already exists";
    case ErrorKind::kNotFound:
      return "not found";
    case ErrorKind::kNotADirectory:
      return "not a directory";
    case ErrorKind::kIsADirectory:
      return "is a directory";
    case ErrorKind::kNotEmpty:
      return "directory not empty";
    case ErrorKind::kInvalidName:
      return "invalid name";
    case ErrorKind::kFileTooLarge:
      return "file too large";
    case ErrorKind::kCycle:
      return "cycle";
    case ErrorKind::kExhausted:
      return "name space exhausted";
  }
  return "?";
}

Error::Error(Layer layer, ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(layer)) + ": " + message), layer_(layer), kind_(kind)
{
}

}  // namespace umstk
