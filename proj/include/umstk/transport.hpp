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

#include <chrono>
#include <cstdint>
#include <optional>
#include <string_view>

#include "umstk/bytes.hpp"

namespace umstk {

// Class-specific and standard control requests used by the bulk-only transport. Only the
// symbolic kind crosses this interface; a hardware backend maps them to request codes.
enum class ControlRequest {
  kBulkOnlyReset,
  kGetMaxLun,
  kClearHaltIn,
  kClearHaltOut,
};

std::string_view to_string(ControlRequest request);

// One claimed mass-storage interface with exactly one bulk IN and one bulk OUT endpoint.
//
// Transfers take a buffer plus an offset into it: bulk_out transmits buffer[offset, offset+length)
// and bulk_in lands received bytes at buffer[offset..]. Both return the count actually moved,
// which may be short. A stalled endpoint raises Error(kStall) until the matching ClearHalt.
//
// Single-owner; one transaction (CBW, data, CSW) in flight at a time.
//
class BulkPipe
{
 public:
  static constexpr std::chrono::milliseconds kDefaultTimeout{21000};

  BulkPipe() = default;
  BulkPipe(const BulkPipe&) = delete;
  BulkPipe& operator=(const BulkPipe&) = delete;
  virtual ~BulkPipe() = default;

  std::size_t bulk_out(ConstByteSpan buffer, std::size_t offset, std::size_t length);
  std::size_t bulk_in(ByteSpan buffer, std::size_t offset, std::size_t length);

  // GetMaxLun yields one byte; the other requests yield nullopt.
  virtual std::optional<std::uint8_t> control(ControlRequest request) = 0;

  std::chrono::milliseconds timeout() const { return timeout_; }
  void set_timeout(std::chrono::milliseconds timeout) { timeout_ = timeout; }

 protected:
  // Receive the already-sliced transfer window.
  virtual std::size_t do_bulk_out(ConstByteSpan data) = 0;
  virtual std::size_t do_bulk_in(ByteSpan data) = 0;

 private:
  std::chrono::milliseconds timeout_ = kDefaultTimeout;
};

}  // namespace umstk
