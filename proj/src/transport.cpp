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

#include "umstk/transport.hpp"

#include <string>

#include "umstk/error.hpp"

namespace umstk {

std::string_view to_string(ControlRequest request)
{
  switch (request) {
    case ControlRequest::kBulkOnlyReset:
      return "BulkOnlyReset";
    case ControlRequest::kGetMaxLun:
      return "GetMaxLun";
    case ControlRequest::kClearHaltIn:
      return "ClearHaltIn";
    case ControlRequest::kClearHaltOut:
      return "ClearHaltOut";
  }
  return "?";
}

namespace {

void check_window(std::size_t size, std::size_t offset, std::size_t length)
{
  if (offset > size || length > size - offset) {
    throw Error(Layer::kTransport, ErrorKind::kRange,
                "transfer window [" + std::to_string(offset) + ", +" + std::to_string(length) +
                    ") exceeds buffer of " + std::to_string(size) + " bytes");
  }
}

}  // namespace

std::size_t BulkPipe::bulk_out(ConstByteSpan buffer, std::size_t offset, std::size_t length)
{
  check_window(buffer.size(), offset, length);
  return do_bulk_out(buffer.subspan(offset, length));
}

std::size_t BulkPipe::bulk_in(ByteSpan buffer, std::size_t offset, std::size_t length)
{
  check_window(buffer.size(), offset, length);
  return do_bulk_in(buffer.subspan(offset, length));
}

}  // namespace umstk
