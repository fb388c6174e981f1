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

#include <array>
#include <cstdint>
#include <string>

#include "umstk/bytes.hpp"

namespace umstk::fat32 {

// FAT entry values. Only the low 28 bits are significant.
inline constexpr std::uint32_t kEntryMask = 0x0FFFFFFF;
inline constexpr std::uint32_t kFree = 0x00000000;
inline constexpr std::uint32_t kReserved = 0x00000001;
inline constexpr std::uint32_t kBad = 0x0FFFFFF7;
inline constexpr std::uint32_t kEndOfChain = 0x0FFFFFFF;
inline constexpr std::uint32_t kFirstDataCluster = 2;

inline bool is_end_of_chain(std::uint32_t v)
{
  return (v & kEntryMask) >= 0x0FFFFFF8;
}

inline constexpr std::uint32_t kMaxFileSize = 0xFFFFFFFF;

struct BootSector {
  std::uint16_t bytes_per_sector = 512;
  std::uint8_t sectors_per_cluster = 8;
  std::uint16_t reserved_sector_count = 32;
  std::uint8_t num_fats = 2;
  std::uint8_t media = 0xF8;
  std::uint32_t hidden_sectors = 0;
  std::uint32_t total_sectors = 0;
  std::uint32_t fat_size_sectors = 0;
  std::uint16_t ext_flags = 0;
  std::uint32_t root_cluster = 2;
  std::uint16_t fsinfo_sector = 1;
  std::uint16_t backup_boot_sector = 6;
  std::uint32_t volume_id = 0;
  std::array<std::uint8_t, 11> volume_label{'N', 'O', ' ', 'N', 'A', 'M', 'E', ' ', ' ', ' ', ' '};

  std::uint32_t cluster_size() const { return std::uint32_t{bytes_per_sector} * sectors_per_cluster; }
  std::uint32_t fat_region_start() const { return reserved_sector_count; }
  std::uint32_t data_region_start() const
  {
    return reserved_sector_count + std::uint32_t{num_fats} * fat_size_sectors;
  }
  // Clusters in the data region, numbered from 2.
  std::uint32_t cluster_count() const;
  // Entries actually backed by both the FAT size and the data region.
  std::uint32_t fat_entry_count() const;
  bool mirroring() const { return (ext_flags & 0x80) == 0; }
  std::uint8_t active_fat() const { return ext_flags & 0x0F; }
  std::string label_text() const;
};

// Throws Error(kNotFat32) on bad bytes per sector, non power-of-two cluster size, missing
// signature or inconsistent geometry.
BootSector parse_boot_sector(ConstByteSpan sector);

bool looks_like_boot_sector(ConstByteSpan sector);

// Writes the fields above into an existing sector image, leaving everything else (boot code,
// OEM name, BPB fields not modelled here) as it is.
void patch_boot_sector(ByteSpan sector, const BootSector& boot);

// A complete boot sector as format_volume lays it out.
Bytes serialize_boot_sector(const BootSector& boot);

inline constexpr std::uint32_t kFsInfoLeadSig = 0x41615252;
inline constexpr std::uint32_t kFsInfoStrucSig = 0x61417272;
inline constexpr std::uint32_t kFsInfoTrailSig = 0xAA550000;
inline constexpr std::uint32_t kUnknown = 0xFFFFFFFF;

struct FsInfo {
  std::uint32_t free_count = kUnknown;
  std::uint32_t next_free = kUnknown;
  bool signatures_valid = false;
};

// Any signature mismatch gives unknown counts rather than an error.
FsInfo parse_fsinfo(ConstByteSpan sector);
void patch_fsinfo(ByteSpan sector, const FsInfo& info);
Bytes serialize_fsinfo(const FsInfo& info, std::size_t sector_size = 512);

// Byte offset of a cluster within the volume. Cluster numbers below 2 throw Error(kRange).
std::uint64_t cluster_to_byte_offset(const BootSector& boot, std::uint32_t cluster);

}  // namespace umstk::fat32
