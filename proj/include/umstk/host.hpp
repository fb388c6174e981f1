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

#include <chrono>
#include <cstdint>
#include <memory>

#include "umstk/blockdev.hpp"
#include "umstk/scsi.hpp"
#include "umstk/transport.hpp"

namespace umstk::scsi {

struct HostOptions {
  // TEST UNIT READY attempts during init before giving up.
  int ready_attempts = 20;
  std::chrono::milliseconds ready_delay{10};
  // READ(10)/WRITE(10) carry a 16-bit block count.
  std::uint32_t max_blocks_per_command = 0xFFFF;
};

struct TransferResult {
  CommandStatusWrapper csw;
  std::size_t transferred = 0;
};

// Bulk-only transport host driver for one pipe. Runs CBW -> data -> CSW transactions with
// strictly increasing tags starting at 1, and the reset recovery sequence on phase errors.
class BulkOnlyHost
{
 public:
  explicit BulkOnlyHost(BulkPipe& pipe, HostOptions options = {});

  // Runs one transaction. The tag is assigned here; flags and data_transfer_length must agree
  // with the supplied buffer. Returns the CSW for status 0 and 1. Status 2 runs reset_recovery()
  // and throws ScsiError(kPhaseError).
  TransferResult transfer_command(CommandBlockWrapper cbw);
  TransferResult transfer_command(CommandBlockWrapper cbw, ByteSpan data_in);
  TransferResult transfer_command(CommandBlockWrapper cbw, ConstByteSpan data_out);

  // Wraps a command in a CBW for LUN 0 and runs it. A failed status fetches sense data and
  // throws ScsiError(kCommandFailed). Returns the bytes moved in the data phase.
  std::size_t execute(const ScsiCommand& command, ByteSpan data_in = {});
  std::size_t execute_out(const ScsiCommand& command, ConstByteSpan data_out);

  SenseData request_sense(std::uint8_t allocation_length = 252);

  // Bulk-only mass storage reset, then clear HALT on IN and OUT, in that order.
  void reset_recovery();

  std::uint8_t get_max_lun();

  std::uint32_t last_tag() const { return next_tag_ - 1; }
  BulkPipe& pipe() { return pipe_; }
  const HostOptions& options() const { return options_; }

 private:
  TransferResult run(CommandBlockWrapper cbw, ByteSpan data_in, ConstByteSpan data_out);
  CommandStatusWrapper read_csw(std::uint32_t tag);
  void clear_halt(ControlRequest which);

  BulkPipe& pipe_;
  HostOptions options_;
  std::uint32_t next_tag_ = 1;
};

// A mass-storage device seen through the host driver. Reads and writes go out as
// READ(10)/WRITE(10), split so no command exceeds max_blocks_per_command.
class ScsiBlockDevice final : public BlockAlignedDevice
{
 public:
  ScsiBlockDevice(BulkOnlyHost host, InquiryResponse inquiry, CapacityResponse capacity);

  std::uint32_t block_size() const override { return capacity_.block_length; }
  std::uint64_t block_count() const override { return capacity_.block_count(); }

  void read_blocks(std::uint64_t lba, ByteSpan out) override;
  void write_blocks(std::uint64_t lba, ConstByteSpan data) override;

  const InquiryResponse& inquiry() const { return inquiry_; }
  BulkOnlyHost& host() { return host_; }

 private:
  void check_blocks(std::uint64_t lba, std::size_t bytes) const;

  BulkOnlyHost host_;
  InquiryResponse inquiry_;
  CapacityResponse capacity_;
};

// INQUIRY (must be a direct-access block device), TEST UNIT READY until ready, READ CAPACITY(10).
std::unique_ptr<ScsiBlockDevice> init_device(BulkPipe& pipe, HostOptions options = {});

}  // namespace umstk::scsi
