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

#include "umstk/volume.hpp"

#include <string>

#include "umstk/error.hpp"
#include "umstk/fat32/layout.hpp"
#include "umstk/log.hpp"

namespace umstk {

namespace {

bool plausible(ConstByteSpan sector, std::size_t slot, std::uint64_t device_blocks)
{
  const std::size_t at = mbr::kTableOffset + slot * mbr::kEntrySize;
  const std::uint8_t boot = sector[at];
  const std::uint32_t first = load_le32(sector, at + 8);
  const std::uint32_t count = load_le32(sector, at + 12);
  return (boot == 0x00 || boot == 0x80) && first >= 1 && count > 0 &&
         std::uint64_t{first} + count <= device_blocks;
}

}  // namespace

DiskLayout inspect_disk(BlockDevice& device)
{
  DiskLayout layout;
  const Bytes sector0 = device.read_at(0, 512);
  std::optional<mbr::MasterBootRecord> table = mbr::parse_mbr(sector0);

  if (table) {
    for (const mbr::PartitionTableEntry& e : table->entries) {
      if (e.partition_type == mbr::type::kGptProtective) {
        throw Error(Layer::kMbr, ErrorKind::kUnsupportedFormat,
                    "GPT protective MBR; GPT disks are not supported");
      }
    }
    bool sane = !table->entries.empty();
    for (std::size_t slot = 0; slot < mbr::kMaxPrimary; ++slot) {
      if (sector0[mbr::kTableOffset + slot * mbr::kEntrySize + 4] != mbr::type::kEmpty &&
          !plausible(sector0, slot, device.block_count())) {
        sane = false;
      }
    }
    if (!sane) {
      table.reset();
    }
  }

  if (table) {
    for (const mbr::PartitionTableEntry& e : table->entries) {
      if (mbr::is_extended(e.partition_type)) {
        for (const mbr::PartitionTableEntry& l : mbr::follow_ebr_chain(device, e)) {
          table->logical_entries.push_back(l);
        }
        continue;
      }
      layout.volumes.push_back(
          VolumeLocation{layout.volumes.size(), false, false, e.partition_type, e.first_lba, e.sector_count});
    }
    for (const mbr::PartitionTableEntry& l : table->logical_entries) {
      layout.volumes.push_back(
          VolumeLocation{layout.volumes.size(), false, true, l.partition_type, l.first_lba, l.sector_count});
    }
    layout.mbr = std::move(table);
    return layout;
  }

  if (fat32::looks_like_boot_sector(sector0)) {
    layout.volumes.push_back(VolumeLocation{0, true, false, 0, 0, device.block_count()});
  }
  return layout;
}

OpenVolume open_volume(BlockDevice& device, std::size_t index, fat32::MountOptions options)
{
  const DiskLayout layout = inspect_disk(device);
  if (layout.volumes.empty()) {
    throw Error(Layer::kMbr, ErrorKind::kNotFound,
                "no partition table and no FAT32 boot sector at LBA 0");
  }
  if (index >= layout.volumes.size()) {
    throw Error(Layer::kMbr, ErrorKind::kNotFound,
                "partition " + std::to_string(index) + " does not exist (" +
                    std::to_string(layout.volumes.size()) + " found)");
  }
  OpenVolume v;
  v.location = layout.volumes[index];
  BlockDevice* target = &device;
  if (!v.location.raw) {
    if (v.location.first_lba + v.location.sector_count > device.block_count()) {
      throw Error(Layer::kMbr, ErrorKind::kMalformedTable,
                  "partition " + std::to_string(index) + " extends past the end of the device");
    }
    v.view = std::make_unique<mbr::PartitionView>(device, v.location.first_lba,
                                                  v.location.sector_count);
    target = v.view.get();
  }
  v.fs = std::make_unique<fat32::FatFileSystem>(*target, std::move(options));
  return v;
}

}  // namespace umstk
