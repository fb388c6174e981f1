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
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "umstk/bytes.hpp"

namespace umstk::fat32 {

inline constexpr std::size_t kDirEntrySize = 32;
inline constexpr std::size_t kLfnCharsPerEntry = 13;
inline constexpr std::size_t kMaxLfnEntries = 20;
inline constexpr std::size_t kMaxLongName = 255;

inline constexpr std::uint8_t kDeletedMarker = 0xE5;
inline constexpr std::uint8_t kKanjiE5Substitute = 0x05;
inline constexpr std::uint8_t kLfnLastFlag = 0x40;

namespace attr {
inline constexpr std::uint8_t kReadOnly = 0x01;
inline constexpr std::uint8_t kHidden = 0x02;
inline constexpr std::uint8_t kSystem = 0x04;
inline constexpr std::uint8_t kVolumeId = 0x08;
inline constexpr std::uint8_t kDirectory = 0x10;
inline constexpr std::uint8_t kArchive = 0x20;
inline constexpr std::uint8_t kLongName = 0x0F;
}  // namespace attr

// NT reserved byte flags: the base / extension of a short name is displayed lower case.
inline constexpr std::uint8_t kNtLowerBase = 0x08;
inline constexpr std::uint8_t kNtLowerExt = 0x10;

// 8 base + 3 extension bytes, space padded, no period.
using ShortName = std::array<std::uint8_t, 11>;

ShortName make_short_name(std::string_view base, std::string_view ext = {});
// "README.TXT" form, honouring the NT lower-case flags.
std::string short_name_display(const ShortName& name, std::uint8_t nt_reserved = 0);

// Rotate-right-and-add over the 11 name bytes as stored on disk.
std::uint8_t short_name_checksum(ConstByteSpan name);
inline std::uint8_t short_name_checksum(const ShortName& name)
{
  return short_name_checksum(ConstByteSpan{name});
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -
// Date and time fields

struct Timestamp {
  int year = 1980;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;
  int centisecond = 0;

  auto operator<=>(const Timestamp&) const = default;
};

struct FatDateTime {
  std::uint16_t date = 0;
  std::uint16_t time = 0;
  // Hundredths of a second within the 2-second window, 0..199.
  std::uint8_t tenths = 0;

  bool operator==(const FatDateTime&) const = default;
};

// Year must be in [1980, 2107]; other fields are range checked too. Throws Error(kRange).
FatDateTime encode_datetime(const Timestamp& t);
Timestamp decode_datetime(std::uint16_t date, std::uint16_t time, std::uint8_t tenths = 0);
// What survives a round trip without the tenths field.
Timestamp truncate_to_two_seconds(Timestamp t);
inline Timestamp date_only(Timestamp t)
{
  return Timestamp{t.year, t.month, t.day};
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -
// Names

// Checks a long name: 1..255 UTF-16 units, none of the forbidden characters, not "." or "..",
// not only spaces and periods. Throws Error(kInvalidName).
std::u16string validate_long_name(std::string_view utf8_name);

// Derives a unique 8.3 alias: uppercased, spaces and all but the last period dropped, other
// disallowed characters replaced by '_', base cut to 8 and extension to 3. A "~N" tail with the
// smallest free N is added when anything was lost or the plain alias is taken.
ShortName generate_short_name(std::string_view long_name, const std::set<ShortName>& existing);

// Upper-cased, space padded volume label of at most 11 short-name characters (spaces allowed).
// Empty gives "NO NAME". Throws Error(kInvalidName).
ShortName make_volume_label(std::string_view label);

// ASCII case folding, used for name collision checks.
std::string fold_case(std::string_view utf8);

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -
// Entries

struct EntryMetadata {
  std::string long_name;  // UTF-8; empty means no LFN entries
  ShortName short_name{};
  std::uint8_t attributes = 0;
  std::uint8_t nt_reserved = 0;
  std::uint32_t start_cluster = 0;
  std::uint32_t file_size = 0;
  Timestamp created;   // hundredth-second resolution
  Timestamp accessed;  // date only
  Timestamp written;   // 2-second resolution

  bool is_directory() const { return (attributes & attr::kDirectory) != 0; }
  // Long name if present, otherwise the short name in display form.
  std::string name() const;

  bool operator==(const EntryMetadata&) const = default;
};

std::array<std::uint8_t, kDirEntrySize> encode_short_entry(const EntryMetadata& meta);
EntryMetadata decode_short_entry(ConstByteSpan entry);

// LFN entries (highest ordinal first) followed by the short entry.
Bytes serialize_directory_entry(const EntryMetadata& meta);

inline std::size_t lfn_entry_count(std::size_t utf16_length)
{
  return (utf16_length + kLfnCharsPerEntry - 1) / kLfnCharsPerEntry;
}

struct DirectoryRecord {
  enum class Kind { kNormal, kDot, kDotDot, kVolumeLabel };

  EntryMetadata meta;
  Kind kind = Kind::kNormal;
  std::uint32_t first_slot = 0;  // first LFN slot, or short_slot when there is no LFN run
  std::uint32_t short_slot = 0;
};

struct DirectoryListing {
  std::vector<DirectoryRecord> records;
  std::optional<std::uint32_t> terminator_slot;
  std::uint32_t slot_count = 0;
  std::optional<std::string> volume_label;
};

// Walks 32-byte records. Never fails: a broken LFN run degrades to the short name alone.
DirectoryListing parse_directory(ConstByteSpan bytes);

}  // namespace umstk::fat32
