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
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "umstk/blockdev.hpp"
#include "umstk/scsi.hpp"
#include "umstk/transport.hpp"

namespace umstk::scsi {

// A scripted misbehaviour of the emulated device. Each fault fires once, on the first
// transaction (or control request) matching its trigger, and is then discarded.
struct Fault {
  enum class Action {
    kForceStatus,  // replace the outcome with `status`; data phase is dropped (IN endpoint stalls)
    kStallData,    // halt the endpoint of the data phase; CSW reports failure
    kShortData,    // send only `short_bytes` of the IN data phase
    kFailControl,  // the matching control request fails at the transport layer
  };

  Action action = Action::kForceStatus;

  // Trigger. command_number counts CBWs received since construction, starting at 1.
  std::optional<std::uint32_t> command_number;
  std::optional<std::uint8_t> opcode;
  std::optional<ControlRequest> control;

  CswStatus status = CswStatus::kFailed;
  std::uint8_t sense_key = sense_key::kHardwareError;
  std::uint32_t short_bytes = 0;
  bool report_residue = true;

  static Fault force_status_on_command(std::uint32_t n, CswStatus status,
                                       std::uint8_t key = sense_key::kHardwareError);
  static Fault force_status_on_opcode(std::uint8_t op, CswStatus status,
                                      std::uint8_t key = sense_key::kHardwareError);
  static Fault stall_data_on_opcode(std::uint8_t op);
  static Fault short_data_on_opcode(std::uint8_t op, std::uint32_t bytes, bool report_residue);
  static Fault fail_control(ControlRequest request);
};

using FaultPlan = std::vector<Fault>;

// Device-side record of everything that crossed the pipe.
struct TargetEvent {
  enum class Kind {
    kCommand,   // CBW accepted: tag, opcode, length
    kDataIn,    // device-to-host bytes queued: length
    kDataOut,   // host-to-device bytes consumed: length
    kStatus,    // CSW queued: tag, status, length = residue
    kStallIn,
    kStallOut,
    kControl,   // control request handled: request
  };

  Kind kind;
  std::uint32_t tag = 0;
  std::uint8_t opcode = 0;
  std::uint32_t length = 0;
  CswStatus status = CswStatus::kPassed;
  ControlRequest request = ControlRequest::kGetMaxLun;
};

std::string to_string(const TargetEvent& event);

struct TargetConfig {
  std::uint8_t max_lun = 0;
  std::uint8_t peripheral_device_type = 0;
  bool removable = true;
  std::uint8_t spc_version = 4;
  std::string vendor = "UMSTK";
  std::string product = "LOOPBACK DISK";
  std::string revision = "1.0";
};

// Emulated bulk-only mass-storage device backed by a BlockDevice.
//
// process_transaction() is the pure command engine. receive()/transmit()/control() wrap it in
// the BOT endpoint state machine that a loopback pipe drives: CBW in, optional data phase, CSW
// out. A second CBW is refused while the previous CSW is undrained.
//
class TargetEmulator
{
 public:
  struct TransactionResult {
    std::optional<Bytes> device_data;
    std::array<std::uint8_t, kCswLength> csw{};
  };

  explicit TargetEmulator(BlockDevice& backing, TargetConfig config = {});

  TransactionResult process_transaction(ConstByteSpan cbw_bytes,
                                        std::optional<ConstByteSpan> host_data = std::nullopt);

  void configure_faults(FaultPlan plan);

  // OUT endpoint: consumes a CBW or data-phase bytes. Returns bytes accepted.
  std::size_t receive(ConstByteSpan bytes);
  // IN endpoint: copies out at most the remainder of the current message.
  std::size_t transmit(ByteSpan out);
  std::optional<std::uint8_t> control(ControlRequest request);

  const std::vector<TargetEvent>& events() const { return events_; }
  void clear_events() { events_.clear(); }

  std::optional<SenseData> pending_sense(std::uint8_t lun = 0) const;
  bool in_halted() const { return in_halted_; }
  bool out_halted() const { return out_halted_; }
  std::uint32_t commands_received() const { return command_count_; }
  const TargetConfig& config() const { return config_; }

 private:
  struct Outcome {
    std::optional<Bytes> data;
    CswStatus status = CswStatus::kPassed;
    std::uint32_t processed = 0;
  };

  Outcome execute(const CommandBlockWrapper& cbw, std::optional<ConstByteSpan> host_data);
  Outcome fail(std::uint8_t lun, std::uint8_t key, std::uint8_t asc, std::uint8_t ascq = 0);
  std::optional<Fault> take_fault(std::uint8_t op);
  void queue_status(std::uint32_t tag, CswStatus status, std::uint32_t residue);
  void finish_in_command(const CommandBlockWrapper& cbw, std::optional<Fault> fault);
  void finish_out_command();

  BlockDevice& backing_;
  TargetConfig config_;
  std::vector<std::optional<SenseData>> pending_sense_;
  FaultPlan faults_;
  std::vector<TargetEvent> events_;

  // Endpoint state machine.
  enum class Phase { kCommand, kDataOut };
  Phase phase_ = Phase::kCommand;
  std::deque<Bytes> in_queue_;
  std::size_t in_offset_ = 0;
  CommandBlockWrapper pending_cbw_;
  Bytes out_buffer_;
  std::optional<Fault> pending_fault_;
  bool in_halted_ = false;
  bool out_halted_ = false;
  bool needs_reset_ = false;
  std::uint32_t command_count_ = 0;
};

}  // namespace umstk::scsi
