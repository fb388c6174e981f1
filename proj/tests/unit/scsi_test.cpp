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

#include <gtest/gtest.h>

#include <random>

#include "harness.hpp"
#include "oracles.hpp"
#include "umstk/scsi.hpp"

namespace umstk::scsi {
namespace {

using testing::error_kind;

CommandBlockWrapper wrap(std::uint32_t tag, std::uint32_t length, std::uint8_t flags,
                         const ScsiCommand& command)
{
  return CommandBlockWrapper{tag, length, flags, 0, build_scsi_command(command)};
}

TEST(CbwGolden, Inquiry36)
{
  EXPECT_EQ(serialize_cbw(wrap(1, 36, 0x80, Inquiry{false, 0, 36, 0})), oracle::kCbwInquiry36);
}

TEST(CbwGolden, TestUnitReady)
{
  EXPECT_EQ(serialize_cbw(wrap(2, 0, 0, TestUnitReady{})), oracle::kCbwTestUnitReady);
}

TEST(CbwGolden, ReadCapacity10)
{
  EXPECT_EQ(serialize_cbw(wrap(3, 8, 0x80, ReadCapacity10{})), oracle::kCbwReadCapacity);
}

TEST(CbwGolden, Read10At2048For8Blocks)
{
  EXPECT_EQ(serialize_cbw(wrap(4, 4096, 0x80, Read10{2048, 8})), oracle::kCbwRead10);
}

TEST(CbwGolden, Write10At2048For8Blocks)
{
  EXPECT_EQ(serialize_cbw(wrap(5, 4096, 0x00, Write10{2048, 8})), oracle::kCbwWrite10);
}

TEST(CbwGolden, RequestSense252)
{
  EXPECT_EQ(serialize_cbw(wrap(6, 252, 0x80, RequestSense{false, 252, 0})),
            oracle::kCbwRequestSense);
}

TEST(Cbw, InquiryFieldPositions)
{
  const auto raw = serialize_cbw(wrap(1, 36, 0x80, Inquiry{}));
  EXPECT_EQ((Bytes{raw.begin(), raw.begin() + 4}), (Bytes{0x55, 0x53, 0x42, 0x43}));
  EXPECT_EQ((Bytes{raw.begin() + 8, raw.begin() + 12}), (Bytes{0x24, 0, 0, 0}));
  EXPECT_EQ(raw[12], 0x80);
  EXPECT_EQ(raw[14], 0x06);
  EXPECT_EQ(raw[15], 0x12);
}

TEST(Cbw, TagZeroTestUnitReady)
{
  const auto raw = serialize_cbw(wrap(0, 0, 0, TestUnitReady{}));
  EXPECT_EQ(raw.size(), 31u);
  EXPECT_EQ(raw[12], 0x00);
  EXPECT_EQ(raw[15], 0x00);
}

TEST(Cbw, CommandLengthOutsideOneToSixteen)
{
  EXPECT_EQ(error_kind([] { serialize_cbw(CommandBlockWrapper{}); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(error_kind([] { serialize_cbw(CommandBlockWrapper{1, 0, 0, 0, Bytes(17)}); }),
            ErrorKind::kInvalidArgument);
}

TEST(Cbw, ParseRejectsBadFraming)
{
  auto raw = oracle::kCbwInquiry36;
  EXPECT_EQ(error_kind([&] { parse_cbw(ConstByteSpan(raw).first(30)); }), ErrorKind::kFraming);
  raw[0] = 0x00;
  EXPECT_EQ(error_kind([&] { parse_cbw(raw); }), ErrorKind::kFraming);
  raw = oracle::kCbwInquiry36;
  raw[14] = 0;
  EXPECT_EQ(error_kind([&] { parse_cbw(raw); }), ErrorKind::kProtocol);
}

// parse(serialize(cbw)) = cbw, with the serialized form re-read field by field.
TEST(CbwProperty, RoundTripThousandRandom)
{
  std::mt19937 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    CommandBlockWrapper cbw;
    cbw.tag = rng();
    cbw.data_transfer_length = rng() % 4 == 0 ? 0 : rng();
    cbw.flags = cbw.data_transfer_length == 0 ? 0 : (rng() % 2 ? kFlagDataIn : 0);
    cbw.lun = rng() % 16;
    cbw.command.resize(1 + rng() % 16);
    for (auto& b : cbw.command) {
      b = static_cast<std::uint8_t>(rng());
    }
    const auto raw = serialize_cbw(cbw);
    ASSERT_EQ(parse_cbw(raw), cbw);

    const oracle::RawCbw r = oracle::read_cbw(raw.data());
    ASSERT_EQ(r.signature, 0x43425355u);
    ASSERT_EQ(r.tag, cbw.tag);
    ASSERT_EQ(r.length, cbw.data_transfer_length);
    ASSERT_EQ(r.flags, cbw.flags);
    ASSERT_EQ(r.lun, cbw.lun);
    ASSERT_EQ(r.cb_length, cbw.command.size());
    for (std::size_t k = 0; k < 16; ++k) {
      ASSERT_EQ(r.cb[k], k < cbw.command.size() ? cbw.command[k] : 0);
    }
  }
}

TEST(Csw, ParsePassed)
{
  const Bytes raw{0x55, 0x53, 0x42, 0x53, 0x01, 0x00, 0x00, 0x00, 0, 0, 0, 0, 0x00};
  const auto csw = parse_csw(raw, 1);
  EXPECT_EQ(csw.status, CswStatus::kPassed);
  EXPECT_EQ(csw.data_residue, 0u);
}

TEST(Csw, ParseFailedAndResidue)
{
  const Bytes raw{0x55, 0x53, 0x42, 0x53, 0x07, 0, 0, 0, 0x00, 0x02, 0, 0, 0x01};
  const auto csw = parse_csw(raw, 7);
  EXPECT_EQ(csw.status, CswStatus::kFailed);
  EXPECT_EQ(csw.data_residue, 512u);
}

TEST(Csw, Errors)
{
  const Bytes good{0x55, 0x53, 0x42, 0x53, 0x01, 0, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(error_kind([&] { parse_csw(good, 2); }), ErrorKind::kProtocol);
  Bytes bad_sig = good;
  bad_sig[3] = 0x43;
  EXPECT_EQ(error_kind([&] { parse_csw(bad_sig, 1); }), ErrorKind::kFraming);
  Bytes bad_status = good;
  bad_status[12] = 3;
  EXPECT_EQ(error_kind([&] { parse_csw(bad_status, 1); }), ErrorKind::kProtocol);
  EXPECT_EQ(error_kind([&] { parse_csw(ConstByteSpan(good).first(12), 1); }), ErrorKind::kFraming);
}

TEST(Csw, SerializeRoundTrip)
{
  const CommandStatusWrapper csw{0xDEADBEEF, 77, CswStatus::kPhaseError};
  const auto raw = serialize_csw(csw);
  EXPECT_EQ(raw[0], 0x55);
  EXPECT_EQ(raw[3], 0x53);
  EXPECT_EQ(parse_csw(raw, 0xDEADBEEF), csw);
}

TEST(Command, Read10BigEndian)
{
  EXPECT_EQ(build_scsi_command(Read10{2048, 8}),
            (Bytes{0x28, 0x00, 0x00, 0x00, 0x08, 0x00, 0x00, 0x00, 0x08, 0x00}));
}

TEST(Command, Write10SharesReadLayout)
{
  EXPECT_EQ(build_scsi_command(Write10{0, 1}),
            (Bytes{0x2A, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x01, 0x00}));
}

TEST(Command, RequestSense252)
{
  EXPECT_EQ(build_scsi_command(RequestSense{}), (Bytes{0x03, 0x00, 0x00, 0x00, 0xFC, 0x00}));
}

TEST(Command, LengthsAndOpcodes)
{
  EXPECT_EQ(build_scsi_command(Inquiry{}).size(), 6u);
  EXPECT_EQ(build_scsi_command(TestUnitReady{}).size(), 6u);
  EXPECT_EQ(build_scsi_command(RequestSense{}).size(), 6u);
  EXPECT_EQ(build_scsi_command(ReadCapacity10{}).size(), 10u);
  EXPECT_EQ(opcode_of(Inquiry{}), 0x12);
  EXPECT_EQ(opcode_of(TestUnitReady{}), 0x00);
  EXPECT_EQ(opcode_of(ReadCapacity10{}), 0x25);
  EXPECT_EQ(opcode_of(Read10{}), 0x28);
  EXPECT_EQ(opcode_of(Write10{}), 0x2A);
  EXPECT_EQ(opcode_of(RequestSense{}), 0x03);
}

TEST(Command, TransferLengthOverflow)
{
  EXPECT_EQ(error_kind([] { build_scsi_command(Read10{0, 0x10000}); }), ErrorKind::kRange);
}

TEST(Command, ParseInvertsBuild)
{
  std::mt19937 rng(5);
  for (int i = 0; i < 200; ++i) {
    const std::uint32_t lba = rng();
    const auto len = static_cast<std::uint32_t>(rng() % 0x10000);
    const std::vector<ScsiCommand> commands = {
        Inquiry{false, 0, static_cast<std::uint16_t>(rng()), 0},
        TestUnitReady{},
        ReadCapacity10{true, lba, 0},
        Read10{lba, len, 0},
        Write10{lba, len, 0},
        RequestSense{false, static_cast<std::uint8_t>(rng()), 0},
    };
    for (const auto& c : commands) {
      ASSERT_EQ(parse_scsi_command(build_scsi_command(c)), c);
    }
  }
  EXPECT_FALSE(parse_scsi_command(Bytes{0xFF, 0, 0, 0, 0, 0}));
  EXPECT_FALSE(parse_scsi_command(Bytes{0x28, 0, 0}));
}

TEST(Response, Inquiry)
{
  InquiryResponse r;
  r.removable = true;
  r.spc_version = 4;
  r.vendor = "UMSTK";
  r.product = "LOOPBACK DISK";
  r.revision = "1.0";
  const Bytes raw = serialize_inquiry(r);
  ASSERT_EQ(raw.size(), 36u);
  EXPECT_EQ(raw[0], 0x00);
  EXPECT_EQ(raw[1], 0x80);
  EXPECT_EQ(raw[3] & 0x0F, 0x02);
  EXPECT_EQ(raw[4], 31);
  EXPECT_EQ(std::string(raw.begin() + 8, raw.begin() + 16), "UMSTK   ");
  const InquiryResponse back = parse_inquiry(raw);
  EXPECT_EQ(back.product, "LOOPBACK DISK");
  EXPECT_TRUE(back.removable);
  EXPECT_EQ(back.response_data_format, 2);
}

TEST(Response, InquiryCdromType)
{
  const Bytes raw{0x05, 0x80, 0x04, 0x02, 0x1F};
  EXPECT_EQ(parse_inquiry(raw).peripheral_device_type, 5);
  EXPECT_EQ(error_kind([] { parse_inquiry(Bytes(4)); }), ErrorKind::kProtocol);
}

TEST(Response, CapacityBigEndian)
{
  const auto raw = serialize_capacity({16383, 512});
  EXPECT_EQ(raw, (std::array<std::uint8_t, 8>{0x00, 0x00, 0x3F, 0xFF, 0x00, 0x00, 0x02, 0x00}));
  const auto back = parse_capacity(raw);
  EXPECT_EQ(back.block_count(), 16384u);
  EXPECT_EQ(back.block_length, 512u);
}

TEST(Response, FixedSense)
{
  SenseData s;
  s.sense_key = sense_key::kIllegalRequest;
  s.information = 0x01020304;
  s.additional_sense_code = 0x21;
  s.sense_key_specific = {0xAB, 0xCD, 0xEF};
  const auto raw = serialize_sense(s);
  EXPECT_EQ(raw[0], 0x70);
  EXPECT_EQ(raw[2], 0x05);
  EXPECT_EQ(raw[3], 0x01);
  EXPECT_EQ(raw[6], 0x04);
  EXPECT_EQ(raw[7], 10);
  EXPECT_EQ(raw[12], 0x21);
  EXPECT_EQ(raw[15], 0xAB);
  EXPECT_EQ(parse_sense(raw), s);
  EXPECT_EQ(error_kind([] { parse_sense(Bytes(17)); }), ErrorKind::kProtocol);
}

TEST(Response, SenseKeyIgnoresFlagBits)
{
  Bytes raw(18, 0);
  raw[0] = 0xF0;  // VALID | 70h
  raw[2] = 0xE3;  // FILEMARK, EOM, ILI set; key 3
  const SenseData s = parse_sense(raw);
  EXPECT_TRUE(s.valid);
  EXPECT_EQ(s.sense_key, 3);
}

}  // namespace
}  // namespace umstk::scsi
