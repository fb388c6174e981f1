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

#include <functional>
#include <memory>

#include "umstk/target.hpp"
#include "umstk/transport.hpp"

namespace umstk {

// In-memory pipe: OUT transfers feed the target's OUT endpoint and IN transfers drain its
// responses, one BOT message at a time. Synchronous, so it never waits; an IN transfer with
// nothing pending fails with Error(kTimeout).
class LoopbackPipe final : public BulkPipe
{
 public:
  enum class Direction { kOut, kIn };
  // Observes the exact bytes crossing the pipe.
  using Tap = std::function<void(Direction, ConstByteSpan)>;

  explicit LoopbackPipe(scsi::TargetEmulator& target) : target_(target) {}

  std::optional<std::uint8_t> control(ControlRequest request) override;

  void set_tap(Tap tap) { tap_ = std::move(tap); }
  scsi::TargetEmulator& target() { return target_; }

 protected:
  std::size_t do_bulk_out(ConstByteSpan data) override;
  std::size_t do_bulk_in(ByteSpan data) override;

 private:
  scsi::TargetEmulator& target_;
  Tap tap_;
};

std::unique_ptr<LoopbackPipe> loopback_pair(scsi::TargetEmulator& target);

}  // namespace umstk
