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
#include <string>
#include <variant>

#include "umstk/bytes.hpp"
#include "umstk/error.hpp"

// Wire formats of the bulk-only transport and the SCSI transparent command set.
//
// The BOT wrappers (CBW, CSW) are little-endian; fields inside SCSI command blocks and their
// responses are big-endian.
//
namespace umstk::scsi {

inline constexpr std::uint32_t kCbwSignature = 0x43425355;  // "USBC"
inline constexpr std::uint32_t kCswSignature = 0x53425355;  // "USBS"
inline constexpr std::size_t kCbwLength = 31;
inline constexpr std::size_t kCswLength = 13;
inline constexpr std::size_t kMaxCommandLength = 16;
inline constexpr std::uint8_t kFlagDataIn = 0x80;

namespace opcode {
inline constexpr std::uint8_t kTestUnitReady = 0x00;
inline constexpr std::uint8_t kRequestSense = 0x03;
inline constexpr std::uint8_t kInquiry = 0x12;
inline constexpr std::uint8_t kReadCapacity10 = 0x25;
inline constexpr std::uint8_t kRead10 = 0x28;
inline constexpr std::uint8_t kWrite10 = 0x2A;
}  // namespace opcode

namespace sense_key {
inline constexpr std::uint8_t kNoSense = 0x0;
inline constexpr std::uint8_t kNotReady = 0x2;
inline constexpr std::uint8_t kMediumError = 0x3;
inline constexpr std::uint8_t kHardwareError = 0x4;
inline constexpr std::uint8_t kIllegalRequest = 0x5;
inline constexpr std::uint8_t kUnitAttention = 0x6;
inline constexpr std::uint8_t kAbortedCommand = 0xB;
}  // namespace sense_key

struct CommandBlockWrapper {
  std::uint32_t tag = 0;
  std::uint32_t data_transfer_length = 0;
  std::uint8_t flags = 0;  // bit 7 set: device to host
  std::uint8_t lun = 0;    // 4 bits
  Bytes command;           // 1..16 bytes

  bool data_in() const { return (flags & kFlagDataIn) != 0; }

  bool operator==(const CommandBlockWrapper&) const = default;
};

std::array<std::uint8_t, kCbwLength> serialize_cbw(const CommandBlockWrapper& cbw);

// Throws Error(kFraming) on bad length or signature, Error(kProtocol) on an out-of-range
// command length.
CommandBlockWrapper parse_cbw(ConstByteSpan raw);

enum class CswStatus : std::uint8_t {
  kPassed = 0,
  kFailed = 1,
  kPhaseError = 2,
};

struct CommandStatusWrapper {
  std::uint32_t tag = 0;
  std::uint32_t data_residue = 0;
  CswStatus status = CswStatus::kPassed;

  bool operator==(const CommandStatusWrapper&) const = default;
};

std::array<std::uint8_t, kCswLength> serialize_csw(const CommandStatusWrapper& csw);

// Validates signature, tag echo and status range.
CommandStatusWrapper parse_csw(ConstByteSpan raw, std::uint32_t expected_tag);

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -
// Command blocks

struct Inquiry {
  bool evpd = false;
  std::uint8_t page_code = 0;
  std::uint16_t allocation_length = 36;
  std::uint8_t control = 0;
  bool operator==(const Inquiry&) const = default;
};

struct TestUnitReady {
  std::uint8_t control = 0;
  bool operator==(const TestUnitReady&) const = default;
};

struct ReadCapacity10 {
  bool pmi = false;
  std::uint32_t lba = 0;
  std::uint8_t control = 0;
  bool operator==(const ReadCapacity10&) const = default;
};

// transfer_length counts blocks and must fit the 16-bit field.
struct Read10 {
  std::uint32_t lba = 0;
  std::uint32_t transfer_length = 0;
  std::uint8_t control = 0;
  bool operator==(const Read10&) const = default;
};

struct Write10 {
  std::uint32_t lba = 0;
  std::uint32_t transfer_length = 0;
  std::uint8_t control = 0;
  bool operator==(const Write10&) const = default;
};

struct RequestSense {
  bool desc = false;
  std::uint8_t allocation_length = 252;
  std::uint8_t control = 0;
  bool operator==(const RequestSense&) const = default;
};

using ScsiCommand = std::variant<Inquiry, TestUnitReady, ReadCapacity10, Read10, Write10, RequestSense>;

std::uint8_t opcode_of(const ScsiCommand& command);

// 6 bytes for INQUIRY / TEST UNIT READY / REQUEST SENSE, 10 for the rest.
Bytes build_scsi_command(const ScsiCommand& command);

// Inverse of build_scsi_command. Unknown opcodes and short blocks yield nullopt.
std::optional<ScsiCommand> parse_scsi_command(ConstByteSpan block);

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -
// Responses

inline constexpr std::size_t kStandardInquiryLength = 36;

struct InquiryResponse {
  std::uint8_t peripheral_device_type = 0;  // 0 = direct access block device
  std::uint8_t peripheral_qualifier = 0;
  bool removable = false;
  std::uint8_t spc_version = 0;
  std::uint8_t response_data_format = 2;
  std::uint8_t additional_length = 0;
  std::string vendor;   // bytes 8..15
  std::string product;  // bytes 16..31
  std::string revision; // bytes 32..35
};

// Requires at least 5 bytes; vendor/product/revision are read when present.
InquiryResponse parse_inquiry(ConstByteSpan data);
Bytes serialize_inquiry(const InquiryResponse& response);

struct CapacityResponse {
  std::uint32_t last_lba = 0;
  std::uint32_t block_length = 0;

  std::uint64_t block_count() const { return std::uint64_t{last_lba} + 1; }
};

CapacityResponse parse_capacity(ConstByteSpan data);
std::array<std::uint8_t, 8> serialize_capacity(const CapacityResponse& response);

inline constexpr std::size_t kFixedSenseLength = 18;
inline constexpr std::uint8_t kSenseCurrentFixed = 0x70;

struct SenseData {
  std::uint8_t response_code = kSenseCurrentFixed;
  bool valid = false;
  std::uint8_t sense_key = sense_key::kNoSense;
  std::uint32_t information = 0;
  std::uint8_t additional_sense_length = kFixedSenseLength - 8;
  std::uint8_t additional_sense_code = 0;
  std::uint8_t additional_sense_code_qualifier = 0;
  // Bytes 15..17, kept opaque.
  std::array<std::uint8_t, 3> sense_key_specific{};

  bool operator==(const SenseData&) const = default;
};

// Fixed-format sense data; needs at least 18 bytes, else Error(kProtocol).
SenseData parse_sense(ConstByteSpan data);
std::array<std::uint8_t, kFixedSenseLength> serialize_sense(const SenseData& sense);

std::string describe(const SenseData& sense);

// Raised when a command completes with CSW status 1; carries the sense data fetched afterwards.
class ScsiError : public Error
{
 public:
  ScsiError(ErrorKind kind, const std::string& message, std::optional<SenseData> sense = {});

  const std::optional<SenseData>& sense() const noexcept { return sense_; }

 private:
  std::optional<SenseData> sense_;
};

}  // namespace umstk::scsi
