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

#include "umstk/scsi.hpp"

#include <algorithm>
#include <cstdio>
#include <type_traits>

namespace umstk::scsi {

namespace {

[[noreturn]] void framing(const std::string& what)
{
  throw Error(Layer::kScsi, ErrorKind::kFraming, what);
}

[[noreturn]] void protocol(const std::string& what)
{
  throw Error(Layer::kScsi, ErrorKind::kProtocol, what);
}

std::string trimmed_ascii(ConstByteSpan data, std::size_t from, std::size_t len)
{
  std::string s;
  for (std::size_t i = from; i < from + len && i < data.size(); ++i) {
    s.push_back(static_cast<char>(data[i]));
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\0')) {
    s.pop_back();
  }
  return s;
}

void put_padded(ByteSpan out, std::size_t from, std::size_t len, const std::string& text)
{
  for (std::size_t i = 0; i < len; ++i) {
    out[from + i] = i < text.size() ? static_cast<std::uint8_t>(text[i]) : ' ';
  }
}

}  // namespace

std::array<std::uint8_t, kCbwLength> serialize_cbw(const CommandBlockWrapper& cbw)
{
  if (cbw.command.empty() || cbw.command.size() > kMaxCommandLength) {
    throw Error(Layer::kScsi, ErrorKind::kInvalidArgument,
                "command length " + std::to_string(cbw.command.size()) + " outside 1..16");
  }
  if (cbw.lun > 0x0F) {
    throw Error(Layer::kScsi, ErrorKind::kInvalidArgument, "LUN does not fit 4 bits");
  }
  std::array<std::uint8_t, kCbwLength> out{};
  store_le32(out, 0, kCbwSignature);
  store_le32(out, 4, cbw.tag);
  store_le32(out, 8, cbw.data_transfer_length);
  out[12] = cbw.flags;
  out[13] = cbw.lun & 0x0F;
  out[14] = static_cast<std::uint8_t>(cbw.command.size()) & 0x1F;
  std::copy(cbw.command.begin(), cbw.command.end(), out.begin() + 15);
  return out;
}

CommandBlockWrapper parse_cbw(ConstByteSpan raw)
{
  if (raw.size() != kCbwLength) {
    framing("CBW must be 31 bytes, got " + std::to_string(raw.size()));
  }
  if (load_le32(raw, 0) != kCbwSignature) {
    framing("bad CBW signature");
  }
  CommandBlockWrapper cbw;
  cbw.tag = load_le32(raw, 4);
  cbw.data_transfer_length = load_le32(raw, 8);
  cbw.flags = raw[12];
  cbw.lun = raw[13] & 0x0F;
  const std::size_t len = raw[14] & 0x1F;
  if (len == 0 || len > kMaxCommandLength) {
    protocol("CBW command length " + std::to_string(len) + " outside 1..16");
  }
  cbw.command.assign(raw.begin() + 15, raw.begin() + 15 + static_cast<std::ptrdiff_t>(len));
  return cbw;
}

std::array<std::uint8_t, kCswLength> serialize_csw(const CommandStatusWrapper& csw)
{
  std::array<std::uint8_t, kCswLength> out{};
  store_le32(out, 0, kCswSignature);
  store_le32(out, 4, csw.tag);
  store_le32(out, 8, csw.data_residue);
  out[12] = static_cast<std::uint8_t>(csw.status);
  return out;
}

CommandStatusWrapper parse_csw(ConstByteSpan raw, std::uint32_t expected_tag)
{
  if (raw.size() != kCswLength) {
    framing("CSW must be 13 bytes, got " + std::to_string(raw.size()));
  }
  if (load_le32(raw, 0) != kCswSignature) {
    framing("bad CSW signature");
  }
  CommandStatusWrapper csw;
  csw.tag = load_le32(raw, 4);
  csw.data_residue = load_le32(raw, 8);
  if (csw.tag != expected_tag) {
    protocol("CSW tag " + std::to_string(csw.tag) + " does not match CBW tag " +
             std::to_string(expected_tag));
  }
  if (raw[12] > 2) {
    protocol("CSW status " + std::to_string(raw[12]) + " is not 0, 1 or 2");
  }
  csw.status = static_cast<CswStatus>(raw[12]);
  return csw;
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

std::uint8_t opcode_of(const ScsiCommand& command)
{
  return std::visit(
      [](const auto& c) -> std::uint8_t {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Inquiry>) {
          return opcode::kInquiry;
        } else if constexpr (std::is_same_v<T, TestUnitReady>) {
          return opcode::kTestUnitReady;
        } else if constexpr (std::is_same_v<T, ReadCapacity10>) {
          return opcode::kReadCapacity10;
        } else if constexpr (std::is_same_v<T, Read10>) {
          return opcode::kRead10;
        } else if constexpr (std::is_same_v<T, Write10>) {
          return opcode::kWrite10;
        } else {
          return opcode::kRequestSense;
        }
      },
      command);
}

Bytes build_scsi_command(const ScsiCommand& command)
{
  const std::uint8_t op = opcode_of(command);
  return std::visit(
      [op](const auto& c) -> Bytes {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Inquiry>) {
          Bytes b(6, 0);
          b[0] = op;
          b[1] = c.evpd ? 1 : 0;
          b[2] = c.page_code;
          store_be16(b, 3, c.allocation_length);
          b[5] = c.control;
          return b;
        } else if constexpr (std::is_same_v<T, TestUnitReady>) {
          Bytes b(6, 0);
          b[0] = op;
          b[5] = c.control;
          return b;
        } else if constexpr (std::is_same_v<T, ReadCapacity10>) {
          if (!c.pmi && c.lba != 0) {
            throw Error(Layer::kScsi, ErrorKind::kInvalidArgument,
                        "READ CAPACITY with PMI clear requires LBA 0");
          }
          Bytes b(10, 0);
          b[0] = op;
          store_be32(b, 2, c.lba);
          b[8] = c.pmi ? 1 : 0;
          b[9] = c.control;
          return b;
        } else if constexpr (std::is_same_v<T, Read10> || std::is_same_v<T, Write10>) {
          if (c.transfer_length > 0xFFFF) {
            throw Error(Layer::kScsi, ErrorKind::kRange,
                        "transfer length " + std::to_string(c.transfer_length) +
                            " does not fit 16 bits");
          }
          Bytes b(10, 0);
          b[0] = op;
          store_be32(b, 2, c.lba);
          store_be16(b, 7, static_cast<std::uint16_t>(c.transfer_length));
          b[9] = c.control;
          return b;
        } else {
          Bytes b(6, 0);
          b[0] = op;
          b[1] = c.desc ? 1 : 0;
          b[4] = c.allocation_length;
          b[5] = c.control;
          return b;
        }
      },
      command);
}

std::optional<ScsiCommand> parse_scsi_command(ConstByteSpan block)
{
  if (block.empty()) {
    return std::nullopt;
  }
  switch (block[0]) {
    case opcode::kInquiry:
      if (block.size() < 6) {
        return std::nullopt;
      }
      return Inquiry{(block[1] & 1) != 0, block[2], load_be16(block, 3), block[5]};
    case opcode::kTestUnitReady:
      if (block.size() < 6) {
        return std::nullopt;
      }
      return TestUnitReady{block[5]};
    case opcode::kRequestSense:
      if (block.size() < 6) {
        return std::nullopt;
      }
      return RequestSense{(block[1] & 1) != 0, block[4], block[5]};
    case opcode::kReadCapacity10:
      if (block.size() < 10) {
        return std::nullopt;
      }
      return ReadCapacity10{(block[8] & 1) != 0, load_be32(block, 2), block[9]};
    case opcode::kRead10:
      if (block.size() < 10) {
        return std::nullopt;
      }
      return Read10{load_be32(block, 2), load_be16(block, 7), block[9]};
    case opcode::kWrite10:
      if (block.size() < 10) {
        return std::nullopt;
      }
      return Write10{load_be32(block, 2), load_be16(block, 7), block[9]};
    default:
      return std::nullopt;
  }
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

InquiryResponse parse_inquiry(ConstByteSpan data)
{
  if (data.size() < 5) {
    protocol("INQUIRY response shorter than 5 bytes");
  }
  InquiryResponse r;
  r.peripheral_device_type = data[0] & 0x1F;
  r.peripheral_qualifier = data[0] >> 5;
  r.removable = (data[1] & 0x80) != 0;
  r.spc_version = data[2];
  r.response_data_format = data[3] & 0x0F;
  r.additional_length = data[4];
  r.vendor = trimmed_ascii(data, 8, 8);
  r.product = trimmed_ascii(data, 16, 16);
  r.revision = trimmed_ascii(data, 32, 4);
  return r;
}

Bytes serialize_inquiry(const InquiryResponse& response)
{
  Bytes out(kStandardInquiryLength, 0);
  out[0] = static_cast<std::uint8_t>((response.peripheral_qualifier << 5) |
                                     (response.peripheral_device_type & 0x1F));
  out[1] = response.removable ? 0x80 : 0x00;
  out[2] = response.spc_version;
  out[3] = response.response_data_format & 0x0F;
  out[4] = static_cast<std::uint8_t>(kStandardInquiryLength - 5);
  put_padded(out, 8, 8, response.vendor);
  put_padded(out, 16, 16, response.product);
  put_padded(out, 32, 4, response.revision);
  return out;
}

CapacityResponse parse_capacity(ConstByteSpan data)
{
  if (data.size() < 8) {
    protocol("READ CAPACITY response shorter than 8 bytes");
  }
  return CapacityResponse{load_be32(data, 0), load_be32(data, 4)};
}

std::array<std::uint8_t, 8> serialize_capacity(const CapacityResponse& response)
{
  std::array<std::uint8_t, 8> out{};
  store_be32(out, 0, response.last_lba);
  store_be32(out, 4, response.block_length);
  return out;
}

SenseData parse_sense(ConstByteSpan data)
{
  if (data.size() < kFixedSenseLength) {
    protocol("fixed sense data needs 18 bytes, got " + std::to_string(data.size()));
  }
  SenseData s;
  s.response_code = data[0] & 0x7F;
  if (s.response_code != 0x70 && s.response_code != 0x71) {
    protocol("sense response code is not fixed format");
  }
  s.valid = (data[0] & 0x80) != 0;
  s.sense_key = data[2] & 0x0F;
  s.information = load_be32(data, 3);
  s.additional_sense_length = data[7];
  s.additional_sense_code = data[12];
  s.additional_sense_code_qualifier = data[13];
  std::copy(data.begin() + 15, data.begin() + 18, s.sense_key_specific.begin());
  return s;
}

std::array<std::uint8_t, kFixedSenseLength> serialize_sense(const SenseData& sense)
{
  std::array<std::uint8_t, kFixedSenseLength> out{};
  out[0] = static_cast<std::uint8_t>((sense.valid ? 0x80 : 0) | (sense.response_code & 0x7F));
  out[2] = sense.sense_key & 0x0F;
  store_be32(out, 3, sense.information);
  out[7] = sense.additional_sense_length;
  out[12] = sense.additional_sense_code;
  out[13] = sense.additional_sense_code_qualifier;
  std::copy(sense.sense_key_specific.begin(), sense.sense_key_specific.end(), out.begin() + 15);
  return out;
}

std::string describe(const SenseData& sense)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "sense key %Xh, ASC %02Xh, ASCQ %02Xh", sense.sense_key,
                sense.additional_sense_code, sense.additional_sense_code_qualifier);
  return buf;
}

ScsiError::ScsiError(ErrorKind kind, const std::string& message, std::optional<SenseData> sense)
    : Error(Layer::kScsi, kind, sense ? message + " (" + describe(*sense) + ")" : message),
      sense_(sense)
{
}

}  // namespace umstk::scsi
