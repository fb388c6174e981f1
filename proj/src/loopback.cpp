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

#include "umstk/loopback.hpp"

namespace umstk {

std::optional<std::uint8_t> LoopbackPipe::control(ControlRequest request)
{
  return target_.control(request);
}

std::size_t LoopbackPipe::do_bulk_out(ConstByteSpan data)
{
  const std::size_t n = target_.receive(data);
  if (tap_) {
    tap_(Direction::kOut, data.first(n));
  }
  return n;
}

std::size_t LoopbackPipe::do_bulk_in(ByteSpan data)
{
  const std::size_t n = target_.transmit(data);
  if (tap_) {
    tap_(Direction::kIn, data.first(n));
  }
  return n;
}

std::unique_ptr<LoopbackPipe> loopback_pair(scsi::TargetEmulator& target)
{
  return std::make_unique<LoopbackPipe>(target);
}

}  // namespace umstk
