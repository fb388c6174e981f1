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

// Reference computations the library is checked against. Nothing here calls into umstk.

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <vector>

namespace umstk::oracle {

// Short-name checksum, transcribed from the FAT reference listing.
//------------------------------------------------------------------
// ChkSum()
// Returns an unsigned byte checksum computed on an unsigned byte
// array. The array must be 11 bytes long and is assumed to contain
// a name stored in the format of a MS-DOS directory entry.
//-------------------------------------------------------------------
inline unsigned char ChkSum(unsigned char* pFcbName)
{
  short FcbNameLen;
  unsigned char Sum;

  Sum = 0;
  for (FcbNameLen = 11; FcbNameLen != 0; FcbNameLen--) {
    // NOTE: The operation is an unsigned char rotate right
    Sum = ((Sum & 1) ? 0x80 : 0) + (Sum >> 1) + *pFcbName++;
  }
  return (Sum);
}

inline unsigned char checksum(const std::array<std::uint8_t, 11>& name)
{
  std::array<unsigned char, 11> copy;
  std::memcpy(copy.data(), name.data(), 11);
  return ChkSum(copy.data());
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -
// Hand-packed command block wrappers. Wrapper fields little-endian, command fields big-endian.

using Cbw = std::array<std::uint8_t, 31>;

// tag 1, 36 bytes in, INQUIRY allocation length 36
inline constexpr Cbw kCbwInquiry36 = {
    0x55, 0x53, 0x42, 0x43,  // dCBWSignature
    0x01, 0x00, 0x00, 0x00,  // dCBWTag
    0x24, 0x00, 0x00, 0x00,  // dCBWDataTransferLength
    0x80,                    // bmCBWFlags
    0x00,                    // bCBWLUN
    0x06,                    // bCBWCBLength
    0x12, 0x00, 0x00, 0x00, 0x24, 0x00,
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
};

// tag 2, no data phase
inline constexpr Cbw kCbwTestUnitReady = {
    0x55, 0x53, 0x42, 0x43,
    0x02, 0x00, 0x00, 0x00,
    0x00, 0x00, 0x00, 0x00,
    0x00,
    0x00,
    0x06,
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
};

// tag 3, 8 bytes in
inline constexpr Cbw kCbwReadCapacity = {
    0x55, 0x53, 0x42, 0x43,
    0x03, 0x00, 0x00, 0x00,
    0x08, 0x00, 0x00, 0x00,
    0x80,
    0x00,
    0x0A,
    0x25, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
};

// tag 4, LBA 2048 (00 00 08 00), 8 blocks (00 08), 4096 bytes in (00 10 00 00)
inline constexpr Cbw kCbwRead10 = {
    0x55, 0x53, 0x42, 0x43,
    0x04, 0x00, 0x00, 0x00,
    0x00, 0x10, 0x00, 0x00,
    0x80,
    0x00,
    0x0A,
    0x28, 0x00, 0x00, 0x00, 0x08, 0x00, 0x00, 0x00, 0x08, 0x00,
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
};

// tag 5, same range as the read, 4096 bytes out
inline constexpr Cbw kCbwWrite10 = {
    0x55, 0x53, 0x42, 0x43,
    0x05, 0x00, 0x00, 0x00,
    0x00, 0x10, 0x00, 0x00,
    0x00,
    0x00,
    0x0A,
    0x2A, 0x00, 0x00, 0x00, 0x08, 0x00, 0x00, 0x00, 0x08, 0x00,
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
};

// tag 6, 252 bytes in (FC), allocation length 252
inline constexpr Cbw kCbwRequestSense = {
    0x55, 0x53, 0x42, 0x43,
    0x06, 0x00, 0x00, 0x00,
    0xFC, 0x00, 0x00, 0x00,
    0x80,
    0x00,
    0x06,
    0x03, 0x00, 0x00, 0x00, 0xFC, 0x00,
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
};

// Field-by-field reader, written against the wrapper table rather than the library.
struct RawCbw {
  std::uint32_t signature;
  std::uint32_t tag;
  std::uint32_t length;
  std::uint8_t flags;
  std::uint8_t lun;
  std::uint8_t cb_length;
  std::array<std::uint8_t, 16> cb;
};

inline RawCbw read_cbw(const std::uint8_t* p)
{
  auto le = [p](int at) {
    return std::uint32_t(p[at]) | std::uint32_t(p[at + 1]) << 8 | std::uint32_t(p[at + 2]) << 16 |
           std::uint32_t(p[at + 3]) << 24;
  };
  RawCbw r{};
  r.signature = le(0);
  r.tag = le(4);
  r.length = le(8);
  r.flags = p[12];
  r.lun = p[13] & 0x0F;
  r.cb_length = p[14] & 0x1F;
  std::memcpy(r.cb.data(), p + 15, 16);
  return r;
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -
// Date and time bit packing: day 0-4, month 5-8, year-1980 9-15; seconds/2 0-4, minutes 5-10,
// hours 11-15.

inline std::uint16_t pack_date(int year, int month, int day)
{
  return static_cast<std::uint16_t>(((year - 1980) << 9) | (month << 5) | day);
}

inline std::uint16_t pack_time(int hour, int minute, int second)
{
  return static_cast<std::uint16_t>((hour << 11) | (minute << 5) | (second / 2));
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -
// Raw FAT32 scan straight from a volume image.

struct RawFatScan {
  std::uint32_t bytes_per_sector = 0;
  std::uint32_t sectors_per_cluster = 0;
  std::uint32_t clusters = 0;            // data clusters, numbered from 2
  std::uint32_t zero_entries = 0;        // free entries among 2..clusters+1
  std::uint32_t fsinfo_free = 0;
  bool copies_identical = true;
  std::vector<std::uint32_t> fat;        // first copy, masked to 28 bits
};

inline RawFatScan scan_fat(const std::vector<std::uint8_t>& vol)
{
  auto le16 = [&](std::size_t at) { return std::uint32_t(vol[at] | vol[at + 1] << 8); };
  auto le32 = [&](std::size_t at) {
    return std::uint32_t(vol[at]) | std::uint32_t(vol[at + 1]) << 8 |
           std::uint32_t(vol[at + 2]) << 16 | std::uint32_t(vol[at + 3]) << 24;
  };
  RawFatScan s;
  s.bytes_per_sector = le16(11);
  s.sectors_per_cluster = vol[13];
  std::uint32_t reserved = le16(14);
  std::uint32_t nfats = vol[16];
  std::uint32_t total = le32(32);
  std::uint32_t fatsz = le32(36);
  std::uint32_t data_start = reserved + nfats * fatsz;
  s.clusters = (total - data_start) / s.sectors_per_cluster;
  std::size_t fat_bytes = std::size_t{fatsz} * s.bytes_per_sector;
  std::size_t first = std::size_t{reserved} * s.bytes_per_sector;
  for (std::uint32_t k = 1; k < nfats; ++k) {
    if (std::memcmp(&vol[first], &vol[first + k * fat_bytes], fat_bytes) != 0) {
      s.copies_identical = false;
    }
  }
  std::uint32_t entries = s.clusters + 2;
  s.fat.resize(entries);
  for (std::uint32_t c = 0; c < entries; ++c) {
    s.fat[c] = le32(first + 4 * std::size_t{c}) & 0x0FFFFFFF;
    if (c >= 2 && s.fat[c] == 0) {
      ++s.zero_entries;
    }
  }
  std::size_t fsinfo = std::size_t{le16(48)} * s.bytes_per_sector;
  s.fsinfo_free = le32(fsinfo + 488);
  return s;
}

}  // namespace umstk::oracle
