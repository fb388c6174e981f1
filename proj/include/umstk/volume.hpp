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
#include <memory>
#include <optional>
#include <vector>

#include "umstk/blockdev.hpp"
#include "umstk/fat32/filesystem.hpp"
#include "umstk/mbr.hpp"

namespace umstk {

struct VolumeLocation {
  std::size_t index = 0;
  bool raw = false;  // filesystem starts at LBA 0, no partition table
  bool logical = false;
  std::uint8_t partition_type = 0;
  std::uint64_t first_lba = 0;
  std::uint64_t sector_count = 0;
};

struct DiskLayout {
  std::optional<mbr::MasterBootRecord> mbr;
  // Primary partitions in slot order, then logical partitions. Extended containers are not listed.
  std::vector<VolumeLocation> volumes;
};

// Sector 0 counts as an MBR when it carries the signature and every used slot looks sane (boot
// byte 00h or 80h, first LBA >= 1, non-zero length inside the device). Otherwise a FAT32 boot
// sector at LBA 0 gives one raw volume. A GPT protective entry throws Error(kUnsupportedFormat).
DiskLayout inspect_disk(BlockDevice& device);

struct OpenVolume {
  VolumeLocation location;
  std::unique_ptr<BlockDevice> view;  // null for raw volumes
  std::unique_ptr<fat32::FatFileSystem> fs;
};

// Mounts volume `index` of inspect_disk. Throws Error(kNotFound) for a bad index or an empty disk.
OpenVolume open_volume(BlockDevice& device, std::size_t index,
                       fat32::MountOptions options = {});

}  // namespace umstk
