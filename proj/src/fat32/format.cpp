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

#include "umstk/fat32/format.hpp"

#include <algorithm>
#include <bit>

#include "umstk/error.hpp"
#include "umstk/fat32/dirent.hpp"

namespace umstk::fat32 {

namespace {

constexpr std::uint16_t kReservedSectors = 32;
constexpr std::uint8_t kNumFats = 2;
constexpr std::uint32_t kMaxClusters = 0x0FFFFFF5;

std::uint8_t default_spc(std::uint64_t bytes)
{
  constexpr std::uint64_t MiB = 1024 * 1024;
  if (bytes < 260 * MiB) {
    return 1;
  }
  if (bytes < 8192 * MiB) {
    return 8;
  }
  if (bytes < 16384 * MiB) {
    return 16;
  }
  if (bytes < 32768 * MiB) {
    return 32;
  }
  return 64;
}

}  // namespace

BootSector plan_geometry(std::uint64_t total_sectors, std::uint16_t bps,
                         const FormatOptions& options)
{
  if (total_sectors * bps < 1024 * 1024) {
    throw Error(Layer::kFat32, ErrorKind::kInvalidArgument,
                "device of " + std::to_string(total_sectors * bps) + " bytes is under 1 MiB");
  }
  BootSector b;
  b.bytes_per_sector = bps;
  b.total_sectors = static_cast<std::uint32_t>(std::min<std::uint64_t>(total_sectors, 0xFFFFFFFF));
  b.sectors_per_cluster =
      options.sectors_per_cluster != 0 ? options.sectors_per_cluster : default_spc(total_sectors * bps);
  if (!std::has_single_bit(b.sectors_per_cluster)) {
    throw Error(Layer::kFat32, ErrorKind::kInvalidArgument, "sectors per cluster must be a power of two");
  }
  b.reserved_sector_count = kReservedSectors;
  b.num_fats = kNumFats;
  b.hidden_sectors = options.hidden_sectors;

  // Smallest FAT that still covers every cluster left after it. need() only shrinks as the FAT
  // grows, so a binary search over the FAT size finds it.
  auto need = [&](std::uint64_t fat) -> std::uint64_t {
    const std::uint64_t used = std::uint64_t{kReservedSectors} + std::uint64_t{kNumFats} * fat;
    if (used >= b.total_sectors) {
      return 0;
    }
    const std::uint64_t clusters =
        std::min<std::uint64_t>((b.total_sectors - used) / b.sectors_per_cluster, kMaxClusters);
    return ((clusters + 2) * 4 + bps - 1) / bps;
  };
  std::uint64_t lo = 1;
  std::uint64_t hi = std::max<std::uint64_t>(need(1), 1);
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (need(mid) <= mid) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  const std::uint32_t fat = static_cast<std::uint32_t>(lo);
  if (std::uint64_t{kReservedSectors} + std::uint64_t{kNumFats} * fat >= b.total_sectors) {
    throw Error(Layer::kFat32, ErrorKind::kInvalidArgument, "no room for a data region");
  }
  b.fat_size_sectors = fat;
  if (b.cluster_count() < 2) {
    throw Error(Layer::kFat32, ErrorKind::kInvalidArgument, "too few clusters for a FAT32 volume");
  }
  b.volume_label = make_volume_label(options.label);
  return b;
}

BootSector format_volume(BlockDevice& device, const FormatOptions& options)
{
  const std::uint32_t bs = device.block_size();
  const std::uint16_t bps = static_cast<std::uint16_t>(bs);
  if (bs != 512 && bs != 1024 && bs != 2048 && bs != 4096) {
    throw Error(Layer::kFat32, ErrorKind::kInvalidArgument,
                "block size " + std::to_string(bs) + " is not a valid sector size");
  }
  BootSector b = plan_geometry(device.block_count(), bps, options);
  const Timestamp now = options.clock ? options.clock() : system_clock_now();
  if (options.volume_id) {
    b.volume_id = *options.volume_id;
  } else {
    const FatDateTime dt = encode_datetime(now);
    b.volume_id = (std::uint32_t{dt.date} << 16) | dt.time;
  }

  // Reserved region and FATs start out zero.
  const Bytes zeros(std::size_t{bps} * 64, 0);
  const std::uint64_t meta_end = std::uint64_t{b.data_region_start()} * bps;
  for (std::uint64_t off = 0; off < meta_end; off += zeros.size()) {
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(zeros.size(), meta_end - off));
    device.write_at(off, ConstByteSpan{zeros.data(), n});
  }

  const Bytes boot = serialize_boot_sector(b);
  device.write_at(0, boot);
  device.write_at(std::uint64_t{b.backup_boot_sector} * bps, boot);

  FsInfo info;
  info.free_count = b.cluster_count() - 1;
  info.next_free = b.root_cluster;
  const Bytes fsinfo = serialize_fsinfo(info, bps);
  device.write_at(std::uint64_t{b.fsinfo_sector} * bps, fsinfo);
  device.write_at((std::uint64_t{b.backup_boot_sector} + b.fsinfo_sector) * bps, fsinfo);

  Bytes fat_head(bps, 0);
  store_le32(fat_head, 0, 0x0FFFFF00u | b.media);
  store_le32(fat_head, 4, kEndOfChain);
  store_le32(fat_head, 8, kEndOfChain);
  for (std::uint8_t i = 0; i < b.num_fats; ++i) {
    const std::uint64_t sector = b.fat_region_start() + std::uint64_t{i} * b.fat_size_sectors;
    device.write_at(sector * bps, fat_head);
  }

  Bytes root(b.cluster_size(), 0);
  if (b.label_text() != "NO NAME") {
    EntryMetadata label;
    label.short_name = b.volume_label;
    label.attributes = attr::kVolumeId;
    label.created = now;
    label.accessed = date_only(now);
    label.written = truncate_to_two_seconds(now);
    const auto raw = encode_short_entry(label);
    std::copy(raw.begin(), raw.end(), root.begin());
  }
  device.write_at(cluster_to_byte_offset(b, b.root_cluster), root);
  device.flush();
  return b;
}

}  // namespace umstk::fat32
