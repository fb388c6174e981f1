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

#include <deque>
#include <random>

#include "harness.hpp"
#include "umstk/loopback.hpp"
#include "umstk/scsi.hpp"
#include "umstk/target.hpp"
#include "umstk/transport.hpp"

namespace umstk {
namespace {

using namespace scsi;
using testing::error_kind;

// Records what reaches the wire and replays a scripted IN stream.
class RecordingPipe final : public BulkPipe
{
 public:
  std::optional<std::uint8_t> control(ControlRequest) override { return std::nullopt; }

  std::vector<Bytes> sent;
  std::deque<std::uint8_t> incoming;

 protected:
  std::size_t do_bulk_out(ConstByteSpan data) override
  {
    sent.emplace_back(data.begin(), data.end());
    return data.size();
  }
  std::size_t do_bulk_in(ByteSpan data) override
  {
    std::size_t n = std::min(data.size(), incoming.size());
    for (std::size_t i = 0; i < n; ++i) {
      data[i] = incoming.front();
      incoming.pop_front();
    }
    return n;
  }
};

TEST(OffsetEquivalence, BulkOutMatchesZeroOffsetCopy)
{
  std::mt19937 rng(11);
  for (int i = 0; i < 500; ++i) {
    const Bytes b = testing::random_bytes(1 + rng() % 4096, rng());
    const std::size_t k = rng() % b.size();
    const std::size_t n = rng() % (b.size() - k + 1);
    RecordingPipe a, z;
    ASSERT_EQ(a.bulk_out(b, k, n), n);
    const Bytes slice(b.begin() + k, b.begin() + k + n);
    ASSERT_EQ(z.bulk_out(slice, 0, n), n);
    ASSERT_EQ(a.sent, z.sent);
    ASSERT_EQ(a.sent.front(), slice);
  }
}

TEST(OffsetEquivalence, BulkInLandsAtOffsetOnly)
{
  std::mt19937 rng(12);
  for (int i = 0; i < 500; ++i) {
    const Bytes wire = testing::random_bytes(1 + rng() % 2048, rng());
    Bytes buf = testing::random_bytes(wire.size() + 64, rng());
    const Bytes before = buf;
    const std::size_t k = rng() % 64;
    const std::size_t n = wire.size();
    RecordingPipe p;
    p.incoming.assign(wire.begin(), wire.end());
    ASSERT_EQ(p.bulk_in(buf, k, n), n);
    ASSERT_TRUE(std::equal(buf.begin(), buf.begin() + k, before.begin()));
    ASSERT_TRUE(std::equal(wire.begin(), wire.end(), buf.begin() + k));
    ASSERT_TRUE(std::equal(buf.begin() + k + n, buf.end(), before.begin() + k + n));
  }
}

TEST(BulkPipe, WindowPastBufferIsRange)
{
  RecordingPipe p;
  Bytes b(10);
  EXPECT_EQ(error_kind([&] { p.bulk_out(b, 5, 6); }), ErrorKind::kRange);
  EXPECT_EQ(error_kind([&] { p.bulk_in(b, 11, 0); }), ErrorKind::kRange);
  EXPECT_TRUE(p.sent.empty());
}

TEST(BulkPipe, TimeoutConfigurable)
{
  RecordingPipe p;
  EXPECT_EQ(p.timeout(), BulkPipe::kDefaultTimeout);
  p.set_timeout(std::chrono::milliseconds(5));
  EXPECT_EQ(p.timeout().count(), 5);
}

class LoopbackTest : public ::testing::Test
{
 protected:
  LoopbackTest() : backing(16384), rig(backing)
  {
    for (std::uint64_t lba = 0; lba < 16; ++lba) {
      backing.write_at(lba * 512, Bytes(512, static_cast<std::uint8_t>(lba)));
    }
  }

  std::size_t send(const CommandBlockWrapper& cbw, std::size_t offset = 0)
  {
    const auto raw = serialize_cbw(cbw);
    Bytes buf(offset, 0xEE);
    buf.insert(buf.end(), raw.begin(), raw.end());
    return rig.pipe.bulk_out(buf, offset, raw.size());
  }

  CommandStatusWrapper status(std::uint32_t tag)
  {
    Bytes csw(13);
    EXPECT_EQ(rig.pipe.bulk_in(csw, 0, 13), 13u);
    return parse_csw(csw, tag);
  }

  MemoryDevice backing;
  testing::Loopback rig;
};

TEST_F(LoopbackTest, TargetObservesValidCbw)
{
  EXPECT_EQ(send({1, 0, 0, 0, build_scsi_command(TestUnitReady{})}), 31u);
  ASSERT_EQ(rig.target.events().front().kind, TargetEvent::Kind::kCommand);
  EXPECT_EQ(rig.target.events().front().tag, 1u);
  EXPECT_EQ(status(1).status, CswStatus::kPassed);
}

TEST_F(LoopbackTest, CbwAtNonZeroOffset)
{
  send({9, 0, 0, 0, build_scsi_command(TestUnitReady{})}, 7);
  EXPECT_EQ(status(9).status, CswStatus::kPassed);
}

TEST_F(LoopbackTest, InquiryTransaction)
{
  send({1, 36, kFlagDataIn, 0, build_scsi_command(Inquiry{})});
  Bytes data(36);
  EXPECT_EQ(rig.pipe.bulk_in(data, 0, 36), 36u);
  EXPECT_EQ(data[0], 0x00);
  EXPECT_EQ(data[3] & 0x0F, 2);
  const auto csw = status(1);
  EXPECT_EQ(csw.status, CswStatus::kPassed);
  EXPECT_EQ(csw.data_residue, 0u);
}

TEST_F(LoopbackTest, CswAtOffsetLeavesPrefix)
{
  send({3, 0, 0, 0, build_scsi_command(TestUnitReady{})});
  Bytes buf(18, 0xA5);
  EXPECT_EQ(rig.pipe.bulk_in(buf, 5, 13), 13u);
  EXPECT_EQ(Bytes(buf.begin(), buf.begin() + 5), Bytes(5, 0xA5));
  EXPECT_EQ(parse_csw(ConstByteSpan(buf).subspan(5, 13), 3).status, CswStatus::kPassed);
}

TEST_F(LoopbackTest, ShortDataPhaseReturnsActualCount)
{
  rig.target.configure_faults({Fault::short_data_on_opcode(opcode::kRead10, 100, true)});
  send({4, 512, kFlagDataIn, 0, build_scsi_command(Read10{3, 1})});
  Bytes data(512);
  EXPECT_EQ(rig.pipe.bulk_in(data, 0, 512), 100u);
  EXPECT_EQ(data[0], 3);
  EXPECT_EQ(status(4).data_residue, 412u);
}

TEST_F(LoopbackTest, SequentialTransactionsWithoutReset)
{
  for (std::uint32_t tag = 1; tag <= 3; ++tag) {
    send({tag, 512, kFlagDataIn, 0, build_scsi_command(Read10{tag, 1})});
    Bytes data(512);
    ASSERT_EQ(rig.pipe.bulk_in(data, 0, 512), 512u);
    ASSERT_EQ(data, Bytes(512, static_cast<std::uint8_t>(tag)));
    ASSERT_EQ(status(tag).status, CswStatus::kPassed);
  }
}

TEST_F(LoopbackTest, SecondCbwBeforeCswDrainedIsRejected)
{
  send({1, 0, 0, 0, build_scsi_command(TestUnitReady{})});
  EXPECT_EQ(error_kind([&] { send({2, 0, 0, 0, build_scsi_command(TestUnitReady{})}); }),
            ErrorKind::kTransport);
  EXPECT_EQ(status(1).status, CswStatus::kPassed);
  send({2, 0, 0, 0, build_scsi_command(TestUnitReady{})});
  EXPECT_EQ(status(2).status, CswStatus::kPassed);
}

TEST_F(LoopbackTest, GetMaxLunSingleUnit)
{
  EXPECT_EQ(rig.pipe.control(ControlRequest::kGetMaxLun), std::optional<std::uint8_t>(0));
}

TEST_F(LoopbackTest, StalledOutEndpoint)
{
  rig.target.configure_faults({Fault::stall_data_on_opcode(opcode::kWrite10)});
  send({1, 512, 0, 0, build_scsi_command(Write10{0, 1})});
  EXPECT_TRUE(rig.target.out_halted());
  const Bytes block(512, 1);
  EXPECT_EQ(error_kind([&] { rig.pipe.bulk_out(block, 0, 512); }), ErrorKind::kStall);
  rig.pipe.control(ControlRequest::kClearHaltOut);
  EXPECT_FALSE(rig.target.out_halted());
  EXPECT_EQ(status(1).status, CswStatus::kFailed);
}

TEST_F(LoopbackTest, ClearHaltInOnStalledIn)
{
  rig.target.configure_faults({Fault::stall_data_on_opcode(opcode::kRead10)});
  send({1, 512, kFlagDataIn, 0, build_scsi_command(Read10{0, 1})});
  Bytes data(512);
  EXPECT_EQ(error_kind([&] { rig.pipe.bulk_in(data, 0, 512); }), ErrorKind::kStall);
  rig.pipe.control(ControlRequest::kClearHaltIn);
  EXPECT_FALSE(rig.target.in_halted());
  EXPECT_EQ(status(1).status, CswStatus::kFailed);
}

TEST_F(LoopbackTest, ResetAfterPhaseErrorRestoresService)
{
  rig.target.configure_faults({Fault::force_status_on_command(1, CswStatus::kPhaseError)});
  send({1, 0, 0, 0, build_scsi_command(TestUnitReady{})});
  EXPECT_EQ(status(1).status, CswStatus::kPhaseError);
  send({2, 0, 0, 0, build_scsi_command(TestUnitReady{})});
  EXPECT_EQ(status(2).status, CswStatus::kPhaseError);
  rig.pipe.control(ControlRequest::kBulkOnlyReset);
  send({3, 0, 0, 0, build_scsi_command(TestUnitReady{})});
  EXPECT_EQ(status(3).status, CswStatus::kPassed);
}

TEST_F(LoopbackTest, EmptyInQueueTimesOut)
{
  Bytes data(13);
  EXPECT_EQ(error_kind([&] { rig.pipe.bulk_in(data, 0, 13); }), ErrorKind::kTimeout);
}

TEST_F(LoopbackTest, TapSeesWireBytes)
{
  std::vector<std::pair<LoopbackPipe::Direction, Bytes>> seen;
  rig.pipe.set_tap([&](LoopbackPipe::Direction d, ConstByteSpan b) {
    seen.emplace_back(d, Bytes(b.begin(), b.end()));
  });
  const CommandBlockWrapper cbw{5, 0, 0, 0, build_scsi_command(TestUnitReady{})};
  send(cbw, 3);
  status(5);
  ASSERT_EQ(seen.size(), 2u);
  const auto raw = serialize_cbw(cbw);
  EXPECT_EQ(seen[0].second, Bytes(raw.begin(), raw.end()));
  EXPECT_EQ(seen[1].first, LoopbackPipe::Direction::kIn);
  EXPECT_EQ(seen[1].second.size(), 13u);
}

TEST_F(LoopbackTest, PairFactory)
{
  auto pipe = loopback_pair(rig.target);
  EXPECT_EQ(&pipe->target(), &rig.target);
}

}  // namespace
}  // namespace umstk
