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
#include <optional>
#include <span>
#include <vector>

#include "umstk/blockdev.hpp"

namespace umstk::mbr {

inline constexpr std::size_t kSectorSize = 512;
inline constexpr std::size_t kTableOffset = 446;
inline constexpr std::size_t kEntrySize = 16;
inline constexpr std::size_t kMaxPrimary = 4;

namespace type {
inline constexpr std::uint8_t kEmpty = 0x00;
inline constexpr std::uint8_t kExtendedChs = 0x05;
inline constexpr std::uint8_t kFat32Chs = 0x0B;
inline constexpr std::uint8_t kFat32Lba = 0x0C;
inline constexpr std::uint8_t kExtendedLba = 0x0F;
inline constexpr std::uint8_t kGptProtective = 0xEE;
}  // namespace type

inline bool is_extended(std::uint8_t t)
{
  return t == type::kExtendedChs || t == type::kExtendedLba;
}

inline bool is_fat32(std::uint8_t t)
{
  return t == type::kFat32Chs || t == type::kFat32Lba;
}

struct PartitionTableEntry {
  bool bootable = false;
  std::uint8_t partition_type = type::kEmpty;
  std::uint32_t first_lba = 0;
  std::uint32_t sector_count = 0;

  bool used() const { return partition_type != type::kEmpty; }
  std::uint64_t end_lba() const { return std::uint64_t{first_lba} + sector_count; }

  bool operator==(const PartitionTableEntry&) const = default;
};

struct MasterBootRecord {
  // Used primary slots in slot order.
  std::vector<PartitionTableEntry> entries;
  // Logical partitions found by walking EBR chains; first_lba is absolute.
  std::vector<PartitionTableEntry> logical_entries;
};

bool has_boot_signature(ConstByteSpan sector);

// Decodes the four slots of a sector with a 55h AAh signature. No signature yields nullopt.
// CHS fields are ignored.
std::optional<MasterBootRecord> parse_mbr(ConstByteSpan sector0);

// Logical partitions of an extended partition. The logical entry in each EBR is relative to that
// EBR; the link entry is relative to the start of the outermost extended partition.
std::vector<PartitionTableEntry> follow_ebr_chain(BlockDevice& device,
                                                  const PartitionTableEntry& extended_entry);

// Packs up to four entries into slots 0..n-1 behind a zeroed code area, with signature.
std::array<std::uint8_t, kSectorSize> serialize_mbr(std::span<const PartitionTableEntry> entries);

// A partition seen as its own device: offsets are shifted by base_lba blocks and bounded by span.
class PartitionView final : public BlockDevice
{
 public:
  PartitionView(BlockDevice& parent, std::uint64_t base_lba, std::uint64_t span);

  std::uint32_t block_size() const override { return parent_.block_size(); }
  std::uint64_t block_count() const override { return span_; }
  std::uint64_t base_lba() const { return base_lba_; }
  void flush() override { parent_.flush(); }

 protected:
  void do_read(std::uint64_t byte_offset, ByteSpan out) override;
  void do_write(std::uint64_t byte_offset, ConstByteSpan data) override;

 private:
  BlockDevice& parent_;
  std::uint64_t base_lba_;
  std::uint64_t span_;
};

}  // namespace umstk::mbr
