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

#include <string>
#include <vector>

#include "umstk/blockdev.hpp"

namespace umstk {

struct ScenarioResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Host driver against the target emulator over the in-memory pipe: init, block round trip,
// failed command with sense, phase error with reset recovery, data stall, invalid opcode, LBA out
// of range. Scratch scenarios run on a private memory device. When `image` is given it is also
// read through the SCSI path and compared with direct reads; it is never written.
std::vector<ScenarioResult> run_loopback_selftest(BlockDevice* image = nullptr);

}  // namespace umstk
