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

#include "umstk/mbr.hpp"

#include <set>
#include <string>

#include "umstk/error.hpp"
#include "umstk/log.hpp"

namespace umstk::mbr {

namespace {

PartitionTableEntry decode_slot(ConstByteSpan sector, std::size_t slot)
{
  const std::size_t at = kTableOffset + slot * kEntrySize;
  PartitionTableEntry e;
  e.bootable = (sector[at] & 0x80) != 0;
  e.partition_type = sector[at + 4];
  e.first_lba = load_le32(sector, at + 8);
  e.sector_count = load_le32(sector, at + 12);
  return e;
}

}  // namespace

bool has_boot_signature(ConstByteSpan sector)
{
  return sector.size() >= kSectorSize && sector[510] == 0x55 && sector[511] == 0xAA;
}

std::optional<MasterBootRecord> parse_mbr(ConstByteSpan sector0)
{
  if (!has_boot_signature(sector0)) {
    return std::nullopt;
  }
  MasterBootRecord mbr;
  for (std::size_t slot = 0; slot < kMaxPrimary; ++slot) {
    PartitionTableEntry e = decode_slot(sector0, slot);
    if (e.used()) {
      mbr.entries.push_back(e);
    }
  }
  return mbr;
}

std::vector<PartitionTableEntry> follow_ebr_chain(BlockDevice& device,
                                                  const PartitionTableEntry& extended_entry)
{
  if (!is_extended(extended_entry.partition_type)) {
    throw Error(Layer::kMbr, ErrorKind::kInvalidArgument, "entry is not an extended partition");
  }
  const std::uint64_t outer_start = extended_entry.first_lba;
  const std::uint32_t bs = device.block_size();

  std::vector<PartitionTableEntry> logical;
  std::set<std::uint64_t> visited;
  std::uint64_t ebr_lba = outer_start;
  while (true) {
    if (!visited.insert(ebr_lba).second) {
      throw Error(Layer::kMbr, ErrorKind::kMalformedTable,
                  "EBR chain loops back to LBA " + std::to_string(ebr_lba));
    }
    if (ebr_lba >= device.block_count()) {
      throw Error(Layer::kMbr, ErrorKind::kMalformedTable,
                  "EBR at LBA " + std::to_string(ebr_lba) + " lies outside the device");
    }
    const Bytes sector = device.read_at(ebr_lba * bs, kSectorSize);
    if (!has_boot_signature(sector)) {
      break;
    }
    PartitionTableEntry data = decode_slot(sector, 0);
    if (data.used() && data.sector_count > 0) {
      const std::uint64_t absolute = ebr_lba + data.first_lba;
      if (absolute > 0xFFFFFFFFu) {
        throw Error(Layer::kMbr, ErrorKind::kMalformedTable, "logical partition beyond 2^32 sectors");
      }
      data.first_lba = static_cast<std::uint32_t>(absolute);
      logical.push_back(data);
    }
    const PartitionTableEntry link = decode_slot(sector, 1);
    if (!link.used() || !is_extended(link.partition_type)) {
      break;
    }
    ebr_lba = outer_start + link.first_lba;
  }
  return logical;
}

std::array<std::uint8_t, kSectorSize> serialize_mbr(std::span<const PartitionTableEntry> entries)
{
  if (entries.size() > kMaxPrimary) {
    throw Error(Layer::kMbr, ErrorKind::kInvalidArgument, "an MBR holds at most 4 entries");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].used()) {
      continue;
    }
    if (entries[i].sector_count == 0) {
      throw Error(Layer::kMbr, ErrorKind::kInvalidArgument, "used entry with zero sectors");
    }
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      if (!entries[j].used()) {
        continue;
      }
      const bool disjoint = entries[i].end_lba() <= entries[j].first_lba ||
                            entries[j].end_lba() <= entries[i].first_lba;
      if (!disjoint) {
        throw Error(Layer::kMbr, ErrorKind::kInvalidArgument,
                    "partitions " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
      }
    }
  }

  std::array<std::uint8_t, kSectorSize> out{};
  for (std::size_t slot = 0; slot < entries.size(); ++slot) {
    const PartitionTableEntry& e = entries[slot];
    const std::size_t at = kTableOffset + slot * kEntrySize;
    out[at] = e.bootable ? 0x80 : 0x00;
    out[at + 4] = e.partition_type;
    store_le32(out, at + 8, e.first_lba);
    store_le32(out, at + 12, e.sector_count);
  }
  out[510] = 0x55;
  out[511] = 0xAA;
  return out;
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

PartitionView::PartitionView(BlockDevice& parent, std::uint64_t base_lba, std::uint64_t span)
    : parent_(parent), base_lba_(base_lba), span_(span)
{
  if (base_lba > parent.block_count() || span > parent.block_count() - base_lba) {
    throw Error(Layer::kMbr, ErrorKind::kRange,
                "partition [" + std::to_string(base_lba) + ", +" + std::to_string(span) +
                    ") exceeds device of " + std::to_string(parent.block_count()) + " blocks");
  }
}

void PartitionView::do_read(std::uint64_t byte_offset, ByteSpan out)
{
  parent_.read_at(base_lba_ * block_size() + byte_offset, out);
}

void PartitionView::do_write(std::uint64_t byte_offset, ConstByteSpan data)
{
  parent_.write_at(base_lba_ * block_size() + byte_offset, data);
}

}  // namespace umstk::mbr
