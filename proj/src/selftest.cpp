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

#include "umstk/selftest.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <stdexcept>

#include "umstk/error.hpp"
#include "umstk/host.hpp"
#include "umstk/loopback.hpp"
#include "umstk/scsi.hpp"
#include "umstk/target.hpp"

namespace umstk {

namespace {

using namespace umstk::scsi;

constexpr std::uint64_t kScratchBlocks = 4096;

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what)
{
  if (!ok) {
    throw Failure(what);
  }
}

struct Rig {
  MemoryDevice backing{kScratchBlocks, 512};
  TargetEmulator target{backing};
  LoopbackPipe pipe{target};
  std::unique_ptr<ScsiBlockDevice> disk = init_device(pipe);

  BulkOnlyHost& host() { return disk->host(); }
};

std::vector<std::uint8_t> opcodes(const TargetEmulator& t)
{
  std::vector<std::uint8_t> out;
  for (const TargetEvent& e : t.events()) {
    if (e.kind == TargetEvent::Kind::kCommand) {
      out.push_back(e.opcode);
    }
  }
  return out;
}

std::vector<ControlRequest> controls(const TargetEmulator& t)
{
  std::vector<ControlRequest> out;
  for (const TargetEvent& e : t.events()) {
    if (e.kind == TargetEvent::Kind::kControl) {
      out.push_back(e.request);
    }
  }
  return out;
}

template <typename Fn>
std::optional<ScsiError> capture(Fn&& fn)
{
  try {
    fn();
  } catch (const ScsiError& e) {
    return e;
  }
  return std::nullopt;
}

std::string init_sequence()
{
  Rig rig;
  const auto ops = opcodes(rig.target);
  expect(ops.size() >= 3 && ops[0] == opcode::kInquiry && ops[1] == opcode::kTestUnitReady &&
             ops.back() == opcode::kReadCapacity10,
         "expected INQUIRY, TEST UNIT READY, READ CAPACITY");
  expect(rig.disk->block_count() == kScratchBlocks && rig.disk->block_size() == 512,
         "capacity does not match the backing device");
  return std::to_string(rig.disk->block_count()) + " blocks of 512 bytes";
}

std::string block_round_trip()
{
  Rig rig;
  rig.target.clear_events();
  Bytes data(512 * 1024);
  std::mt19937 rng(7);
  std::generate(data.begin(), data.end(), [&] { return static_cast<std::uint8_t>(rng()); });
  rig.disk->write_blocks(100, data);
  Bytes back(data.size());
  rig.disk->read_blocks(100, back);
  expect(back == data, "data read back differs");

  std::uint32_t last_tag = 0;
  std::size_t commands = 0;
  for (const TargetEvent& e : rig.target.events()) {
    if (e.kind == TargetEvent::Kind::kCommand) {
      expect(e.tag > last_tag, "tags not strictly increasing");
      last_tag = e.tag;
      ++commands;
    }
    if (e.kind == TargetEvent::Kind::kStatus) {
      expect(e.tag == last_tag, "CSW tag does not match CBW tag");
      expect(e.status == CswStatus::kPassed && e.length == 0, "non-zero residue or failed status");
    }
  }
  return std::to_string(data.size()) + " bytes in " + std::to_string(commands) + " commands";
}

std::string failed_command_sense()
{
  Rig rig;
  rig.target.configure_faults(
      {Fault::force_status_on_opcode(opcode::kTestUnitReady, CswStatus::kFailed, sense_key::kNotReady)});
  rig.target.clear_events();
  const auto err = capture([&] { rig.host().execute(TestUnitReady{}); });
  expect(err.has_value() && err->kind() == ErrorKind::kCommandFailed, "command failure not reported");
  expect(err->sense() && err->sense()->sense_key == sense_key::kNotReady,
         "sense key NOT READY not surfaced");
  const auto ops = opcodes(rig.target);
  expect(ops.size() == 2 && ops[1] == opcode::kRequestSense, "REQUEST SENSE not issued");
  return describe(*err->sense());
}

std::string phase_error_recovery()
{
  Rig rig;
  rig.target.configure_faults({Fault::force_status_on_opcode(opcode::kTestUnitReady,
                                                             CswStatus::kPhaseError)});
  rig.target.clear_events();
  const auto err = capture([&] { rig.host().execute(TestUnitReady{}); });
  expect(err.has_value() && err->kind() == ErrorKind::kPhaseError, "phase error not reported");
  const auto ctl = controls(rig.target);
  expect(ctl == std::vector<ControlRequest>{ControlRequest::kBulkOnlyReset,
                                            ControlRequest::kClearHaltIn,
                                            ControlRequest::kClearHaltOut},
         "reset recovery sequence not observed");
  rig.host().execute(TestUnitReady{});
  return "reset, clear halt IN, clear halt OUT; next command passed";
}

std::string data_stall()
{
  Rig rig;
  rig.target.configure_faults({Fault::stall_data_on_opcode(opcode::kRead10)});
  Bytes block(512);
  const auto err = capture([&] { rig.disk->read_blocks(0, block); });
  expect(err.has_value() && err->sense().has_value(), "stall not reported with sense");
  expect(!rig.target.in_halted(), "IN endpoint still halted");
  rig.disk->read_blocks(0, block);
  return "halt cleared; " + describe(*err->sense());
}

std::string invalid_opcode()
{
  Rig rig;
  CommandBlockWrapper cbw;
  cbw.command = Bytes{0xFF, 0, 0, 0, 0, 0};
  const TransferResult r = rig.host().transfer_command(cbw);
  expect(r.csw.status == CswStatus::kFailed, "unknown opcode did not fail");
  const SenseData sense = rig.host().request_sense();
  expect(sense.sense_key == sense_key::kIllegalRequest && sense.additional_sense_code == 0x20,
         "expected ILLEGAL REQUEST / invalid command operation code");
  return describe(sense);
}

std::string lba_out_of_range()
{
  Rig rig;
  Bytes block(512);
  const auto err = capture([&] {
    rig.host().execute(Read10{static_cast<std::uint32_t>(kScratchBlocks), 1}, block);
  });
  expect(err && err->sense() && err->sense()->sense_key == sense_key::kIllegalRequest &&
             err->sense()->additional_sense_code == 0x21,
         "expected ILLEGAL REQUEST / LBA out of range");
  return describe(*err->sense());
}

std::string image_read(BlockDevice& image)
{
  TargetEmulator target(image);
  LoopbackPipe pipe(target);
  auto disk = init_device(pipe);
  expect(disk->block_count() == image.block_count(), "capacity differs from image size");
  const std::uint64_t blocks = std::min<std::uint64_t>(image.block_count(), 8192);
  const std::size_t bytes = static_cast<std::size_t>(blocks * image.block_size());
  Bytes via(bytes);
  disk->read_at(0, via);
  expect(via == image.read_at(0, bytes), "SCSI read differs from direct read");
  return std::to_string(blocks) + " blocks compared";
}

}  // namespace

std::vector<ScenarioResult> run_loopback_selftest(BlockDevice* image)
{
  std::vector<std::pair<std::string, std::function<std::string()>>> scenarios = {
      {"init sequence", init_sequence},
      {"block round trip", block_round_trip},
      {"failed command returns sense", failed_command_sense},
      {"phase error reset recovery", phase_error_recovery},
      {"data phase stall", data_stall},
      {"invalid opcode", invalid_opcode},
      {"LBA out of range", lba_out_of_range},
  };
  if (image != nullptr) {
    scenarios.emplace_back("image read via SCSI", [image] { return image_read(*image); });
  }

  std::vector<ScenarioResult> results;
  for (auto& [name, fn] : scenarios) {
    ScenarioResult r{name, false, {}};
    try {
      r.detail = fn();
      r.passed = true;
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace umstk
