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

#include "umstk/fat32/layout.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "umstk/error.hpp"

namespace umstk::fat32 {

namespace {

[[noreturn]] void not_fat32(const std::string& why)
{
  throw Error(Layer::kFat32, ErrorKind::kNotFat32, why);
}

}  // namespace

std::uint32_t BootSector::cluster_count() const
{
  const std::uint32_t data = data_region_start();
  if (total_sectors <= data || sectors_per_cluster == 0) {
    return 0;
  }
  return (total_sectors - data) / sectors_per_cluster;
}

std::uint32_t BootSector::fat_entry_count() const
{
  const std::uint64_t by_fat = std::uint64_t{fat_size_sectors} * bytes_per_sector / 4;
  const std::uint64_t by_data = std::uint64_t{cluster_count()} + 2;
  return static_cast<std::uint32_t>(std::min({by_fat, by_data, std::uint64_t{kEntryMask} + 1}));
}

std::string BootSector::label_text() const
{
  std::string s(volume_label.begin(), volume_label.end());
  while (!s.empty() && (s.back() == ' ' || s.back() == '\0')) {
    s.pop_back();
  }
  return s;
}

BootSector parse_boot_sector(ConstByteSpan sector)
{
  if (sector.size() < 512) {
    not_fat32("boot sector shorter than 512 bytes");
  }
  if (sector[510] != 0x55 || sector[511] != 0xAA) {
    not_fat32("boot sector lacks the 55h AAh signature");
  }
  BootSector b;
  b.bytes_per_sector = load_le16(sector, 11);
  if (b.bytes_per_sector != 512 && b.bytes_per_sector != 1024 && b.bytes_per_sector != 2048 &&
      b.bytes_per_sector != 4096) {
    not_fat32("invalid bytes per sector " + std::to_string(b.bytes_per_sector));
  }
  b.sectors_per_cluster = sector[13];
  if (b.sectors_per_cluster == 0 || !std::has_single_bit(b.sectors_per_cluster)) {
    not_fat32("sectors per cluster " + std::to_string(b.sectors_per_cluster) +
              " is not a power of two");
  }
  b.reserved_sector_count = load_le16(sector, 14);
  b.num_fats = sector[16];
  b.media = sector[21];
  b.hidden_sectors = load_le32(sector, 28);
  b.total_sectors = load_le32(sector, 32);
  b.fat_size_sectors = load_le32(sector, 36);
  b.ext_flags = load_le16(sector, 40);
  b.root_cluster = load_le32(sector, 44);
  b.fsinfo_sector = load_le16(sector, 48);
  b.backup_boot_sector = load_le16(sector, 50);
  b.volume_id = load_le32(sector, 67);
  std::copy_n(sector.begin() + 71, 11, b.volume_label.begin());

  // FAT12/16 keep a 16-bit FAT size and a fixed root directory; FAT32 zeroes both.
  if (load_le16(sector, 22) != 0 || load_le16(sector, 17) != 0) {
    not_fat32("FAT12/FAT16 BPB (fixed root directory or 16-bit FAT size)");
  }
  if (b.reserved_sector_count == 0 || b.num_fats == 0 || b.fat_size_sectors == 0 ||
      b.total_sectors == 0) {
    not_fat32("zero-sized region in BPB");
  }
  if (b.total_sectors <= b.data_region_start() || b.cluster_count() == 0) {
    not_fat32("volume has no data region");
  }
  if (b.mirroring() == false && b.active_fat() >= b.num_fats) {
    not_fat32("active FAT index beyond FAT count");
  }
  if (b.root_cluster < kFirstDataCluster || b.root_cluster >= b.fat_entry_count()) {
    not_fat32("root cluster " + std::to_string(b.root_cluster) + " out of range");
  }
  if (b.fsinfo_sector >= b.reserved_sector_count) {
    not_fat32("FSInfo sector outside the reserved region");
  }
  return b;
}

bool looks_like_boot_sector(ConstByteSpan sector)
{
  try {
    parse_boot_sector(sector);
    return true;
  } catch (const Error&) {
    return false;
  }
}

void patch_boot_sector(ByteSpan s, const BootSector& b)
{
  store_le16(s, 11, b.bytes_per_sector);
  s[13] = b.sectors_per_cluster;
  store_le16(s, 14, b.reserved_sector_count);
  s[16] = b.num_fats;
  s[21] = b.media;
  store_le32(s, 28, b.hidden_sectors);
  store_le32(s, 32, b.total_sectors);
  store_le32(s, 36, b.fat_size_sectors);
  store_le16(s, 40, b.ext_flags);
  store_le32(s, 44, b.root_cluster);
  store_le16(s, 48, b.fsinfo_sector);
  store_le16(s, 50, b.backup_boot_sector);
  store_le32(s, 67, b.volume_id);
  std::copy(b.volume_label.begin(), b.volume_label.end(), s.begin() + 71);
  s[510] = 0x55;
  s[511] = 0xAA;
}

Bytes serialize_boot_sector(const BootSector& b)
{
  Bytes s(b.bytes_per_sector, 0);
  s[0] = 0xEB;  // jmp short +0x58; nop
  s[1] = 0x58;
  s[2] = 0x90;
  std::memcpy(&s[3], "UMSTK1.0", 8);
  store_le16(s, 24, 32);  // sectors per track, geometry hint only
  store_le16(s, 26, 64);  // heads
  s[64] = 0x80;           // drive number
  s[66] = 0x29;           // extended boot signature: volume id, label and type follow
  std::memcpy(&s[82], "FAT32   ", 8);
  patch_boot_sector(s, b);
  return s;
}

FsInfo parse_fsinfo(ConstByteSpan s)
{
  FsInfo info;
  if (s.size() < 512 || load_le32(s, 0) != kFsInfoLeadSig || load_le32(s, 484) != kFsInfoStrucSig ||
      load_le32(s, 508) != kFsInfoTrailSig) {
    return info;
  }
  info.signatures_valid = true;
  info.free_count = load_le32(s, 488);
  info.next_free = load_le32(s, 492);
  return info;
}

void patch_fsinfo(ByteSpan s, const FsInfo& info)
{
  store_le32(s, 0, kFsInfoLeadSig);
  store_le32(s, 484, kFsInfoStrucSig);
  store_le32(s, 488, info.free_count);
  store_le32(s, 492, info.next_free);
  store_le32(s, 508, kFsInfoTrailSig);
}

Bytes serialize_fsinfo(const FsInfo& info, std::size_t sector_size)
{
  Bytes s(sector_size, 0);
  patch_fsinfo(s, info);
  return s;
}

std::uint64_t cluster_to_byte_offset(const BootSector& boot, std::uint32_t cluster)
{
  if (cluster < kFirstDataCluster) {
    throw Error(Layer::kFat32, ErrorKind::kRange,
                "cluster " + std::to_string(cluster) + " precedes the data region");
  }
  const std::uint64_t sector =
      std::uint64_t{boot.data_region_start()} + std::uint64_t{cluster - 2} * boot.sectors_per_cluster;
  return sector * boot.bytes_per_sector;
}

}  // namespace umstk::fat32
