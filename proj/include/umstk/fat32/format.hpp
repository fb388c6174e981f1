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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "umstk/blockdev.hpp"
#include "umstk/fat32/filesystem.hpp"
#include "umstk/fat32/layout.hpp"

namespace umstk::fat32 {

struct FormatOptions {
  std::string label = "NO NAME";
  // 0 picks by volume size.
  std::uint8_t sectors_per_cluster = 0;
  std::uint32_t hidden_sectors = 0;
  std::optional<std::uint32_t> volume_id;
  Clock clock;
};

// Geometry format_volume would choose for a device of the given size.
BootSector plan_geometry(std::uint64_t total_sectors, std::uint16_t bytes_per_sector,
                         const FormatOptions& options);

// Lays down boot sector and backup, FSInfo and backup, both FATs and an empty root directory.
// Devices under 1 MiB throw Error(kInvalidArgument).
BootSector format_volume(BlockDevice& device, const FormatOptions& options = {});

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

struct ValidationReport {
  std::vector<std::string> problems;
  std::uint32_t files = 0;
  std::uint32_t directories = 0;
  std::uint32_t used_clusters = 0;

  bool ok() const { return problems.empty(); }
};

// Consistency check written against the raw on-disk bytes: FAT copies agree, FSInfo free count
// matches the FAT, every chain is sound and owned once, sizes agree with chain lengths and
// dot/dotdot entries point where they should.
ValidationReport validate_volume(BlockDevice& device);

}  // namespace umstk::fat32
