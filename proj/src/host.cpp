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

#include "umstk/host.hpp"

#include <algorithm>
#include <thread>

#include "umstk/log.hpp"

namespace umstk::scsi {

namespace {

bool is_stall(const Error& e)
{
  return e.kind() == ErrorKind::kStall;
}

}  // namespace

BulkOnlyHost::BulkOnlyHost(BulkPipe& pipe, HostOptions options) : pipe_(pipe), options_(options)
{
}

TransferResult BulkOnlyHost::transfer_command(CommandBlockWrapper cbw)
{
  return run(std::move(cbw), {}, {});
}

TransferResult BulkOnlyHost::transfer_command(CommandBlockWrapper cbw, ByteSpan data_in)
{
  return run(std::move(cbw), data_in, {});
}

TransferResult BulkOnlyHost::transfer_command(CommandBlockWrapper cbw, ConstByteSpan data_out)
{
  return run(std::move(cbw), {}, data_out);
}

void BulkOnlyHost::clear_halt(ControlRequest which)
{
  log().debug("host: clearing halt ({})", to_string(which));
  pipe_.control(which);
}

TransferResult BulkOnlyHost::run(CommandBlockWrapper cbw, ByteSpan data_in, ConstByteSpan data_out)
{
  const std::size_t length = data_in.size() + data_out.size();
  if (!data_in.empty() && !data_out.empty()) {
    throw Error(Layer::kScsi, ErrorKind::kInvalidArgument, "data phase has one direction");
  }
  if (cbw.data_transfer_length != length) {
    throw Error(Layer::kScsi, ErrorKind::kInvalidArgument,
                "dCBWDataTransferLength does not match the data buffer");
  }
  if (length == 0 ? cbw.flags != 0 : cbw.data_in() != !data_in.empty()) {
    throw Error(Layer::kScsi, ErrorKind::kInvalidArgument,
                "bmCBWFlags direction does not match the data phase");
  }

  cbw.tag = next_tag_++;
  const auto raw = serialize_cbw(cbw);
  try {
    if (pipe_.bulk_out(raw, 0, raw.size()) != raw.size()) {
      throw Error(Layer::kTransport, ErrorKind::kTransport, "short CBW transfer");
    }
  } catch (const Error& e) {
    if (is_stall(e)) {
      reset_recovery();
    }
    throw;
  }

  std::size_t moved = 0;
  if (!data_in.empty()) {
    try {
      while (moved < data_in.size()) {
        const std::size_t want = data_in.size() - moved;
        const std::size_t n = pipe_.bulk_in(data_in, moved, want);
        moved += n;
        if (n < want) {
          break;  // short packet ends the data phase
        }
      }
    } catch (const Error& e) {
      if (!is_stall(e)) {
        throw;
      }
      clear_halt(ControlRequest::kClearHaltIn);
    }
  } else if (!data_out.empty()) {
    try {
      while (moved < data_out.size()) {
        const std::size_t n = pipe_.bulk_out(data_out, moved, data_out.size() - moved);
        if (n == 0) {
          break;
        }
        moved += n;
      }
    } catch (const Error& e) {
      if (!is_stall(e)) {
        throw;
      }
      clear_halt(ControlRequest::kClearHaltOut);
    }
  }

  const CommandStatusWrapper csw = read_csw(cbw.tag);
  if (csw.status == CswStatus::kPhaseError) {
    log().info("host: phase error on tag {}, running reset recovery", cbw.tag);
    reset_recovery();
    throw ScsiError(ErrorKind::kPhaseError,
                    "phase error on command " + std::to_string(cbw.command.front()));
  }

  if (csw.status == CswStatus::kPassed) {
    if (!data_in.empty() && moved < length && csw.data_residue == 0) {
      throw Error(Layer::kScsi, ErrorKind::kProtocol,
                  "device sent " + std::to_string(moved) + " of " + std::to_string(length) +
                      " bytes but reported no residue");
    }
    if (!data_out.empty() && csw.data_residue != 0) {
      throw Error(Layer::kScsi, ErrorKind::kIo,
                  "device left " + std::to_string(csw.data_residue) + " bytes of the write unprocessed");
    }
  }
  return {csw, moved};
}

CommandStatusWrapper BulkOnlyHost::read_csw(std::uint32_t tag)
{
  std::array<std::uint8_t, kCswLength> raw{};
  std::size_t n = 0;
  for (int attempt = 0;; ++attempt) {
    try {
      n = pipe_.bulk_in(raw, 0, raw.size());
      break;
    } catch (const Error& e) {
      if (!is_stall(e) || attempt > 0) {
        throw;
      }
      clear_halt(ControlRequest::kClearHaltIn);
    }
  }
  try {
    if (n != kCswLength) {
      throw Error(Layer::kScsi, ErrorKind::kFraming,
                  "CSW of " + std::to_string(n) + " bytes instead of 13");
    }
    return parse_csw(raw, tag);
  } catch (const Error&) {
    reset_recovery();
    throw;
  }
}

void BulkOnlyHost::reset_recovery()
{
  try {
    pipe_.control(ControlRequest::kBulkOnlyReset);
    pipe_.control(ControlRequest::kClearHaltIn);
    pipe_.control(ControlRequest::kClearHaltOut);
  } catch (const Error& e) {
    throw Error(Layer::kTransport, ErrorKind::kTransport,
                std::string("reset recovery failed, device unusable: ") + e.what());
  }
}

std::uint8_t BulkOnlyHost::get_max_lun()
{
  const auto value = pipe_.control(ControlRequest::kGetMaxLun);
  if (!value) {
    throw Error(Layer::kTransport, ErrorKind::kProtocol, "Get Max LUN returned no data");
  }
  return *value;
}

std::size_t BulkOnlyHost::execute(const ScsiCommand& command, ByteSpan data_in)
{
  CommandBlockWrapper cbw;
  cbw.data_transfer_length = static_cast<std::uint32_t>(data_in.size());
  cbw.flags = data_in.empty() ? 0 : kFlagDataIn;
  cbw.command = build_scsi_command(command);
  const TransferResult r = run(std::move(cbw), data_in, {});
  if (r.csw.status == CswStatus::kFailed) {
    throw ScsiError(ErrorKind::kCommandFailed,
                    "command " + std::to_string(opcode_of(command)) + " failed", request_sense());
  }
  return r.transferred;
}

std::size_t BulkOnlyHost::execute_out(const ScsiCommand& command, ConstByteSpan data_out)
{
  CommandBlockWrapper cbw;
  cbw.data_transfer_length = static_cast<std::uint32_t>(data_out.size());
  cbw.flags = 0;
  cbw.command = build_scsi_command(command);
  const TransferResult r = run(std::move(cbw), {}, data_out);
  if (r.csw.status == CswStatus::kFailed) {
    throw ScsiError(ErrorKind::kCommandFailed,
                    "command " + std::to_string(opcode_of(command)) + " failed", request_sense());
  }
  return r.transferred;
}

SenseData BulkOnlyHost::request_sense(std::uint8_t allocation_length)
{
  Bytes buffer(allocation_length);
  CommandBlockWrapper cbw;
  cbw.data_transfer_length = allocation_length;
  cbw.flags = allocation_length ? kFlagDataIn : 0;
  cbw.command = build_scsi_command(RequestSense{false, allocation_length, 0});
  const TransferResult r = run(std::move(cbw), buffer, {});
  if (r.csw.status != CswStatus::kPassed) {
    throw ScsiError(ErrorKind::kProtocol, "REQUEST SENSE itself failed");
  }
  return parse_sense(ConstByteSpan{buffer}.first(r.transferred));
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

ScsiBlockDevice::ScsiBlockDevice(BulkOnlyHost host, InquiryResponse inquiry,
                                 CapacityResponse capacity)
    : host_(std::move(host)), inquiry_(std::move(inquiry)), capacity_(capacity)
{
}

void ScsiBlockDevice::check_blocks(std::uint64_t lba, std::size_t bytes) const
{
  if (bytes % block_size() != 0) {
    throw Error(Layer::kScsi, ErrorKind::kInvalidArgument,
                "buffer is not a whole number of blocks");
  }
  const std::uint64_t count = bytes / block_size();
  if (lba > block_count() || count > block_count() - lba) {
    throw Error(Layer::kScsi, ErrorKind::kRange,
                "blocks [" + std::to_string(lba) + ", +" + std::to_string(count) +
                    ") beyond device of " + std::to_string(block_count()) + " blocks");
  }
  if (lba + count > 0x100000000ull) {
    throw Error(Layer::kScsi, ErrorKind::kRange, "LBA does not fit READ(10)/WRITE(10)");
  }
}

void ScsiBlockDevice::read_blocks(std::uint64_t lba, ByteSpan out)
{
  check_blocks(lba, out.size());
  const std::uint32_t bs = block_size();
  std::uint64_t done = 0;
  const std::uint64_t total = out.size() / bs;
  while (done < total) {
    const auto n = static_cast<std::uint32_t>(
        std::min<std::uint64_t>(total - done, host_.options().max_blocks_per_command));
    ByteSpan window = out.subspan(done * bs, std::size_t{n} * bs);
    const std::size_t got =
        host_.execute(Read10{static_cast<std::uint32_t>(lba + done), n, 0}, window);
    if (got != window.size()) {
      throw Error(Layer::kScsi, ErrorKind::kIo,
                  "short read: " + std::to_string(got) + " of " + std::to_string(window.size()));
    }
    done += n;
  }
}

void ScsiBlockDevice::write_blocks(std::uint64_t lba, ConstByteSpan data)
{
  check_blocks(lba, data.size());
  const std::uint32_t bs = block_size();
  std::uint64_t done = 0;
  const std::uint64_t total = data.size() / bs;
  while (done < total) {
    const auto n = static_cast<std::uint32_t>(
        std::min<std::uint64_t>(total - done, host_.options().max_blocks_per_command));
    host_.execute_out(Write10{static_cast<std::uint32_t>(lba + done), n, 0},
                      data.subspan(done * bs, std::size_t{n} * bs));
    done += n;
  }
}

std::unique_ptr<ScsiBlockDevice> init_device(BulkPipe& pipe, HostOptions options)
{
  BulkOnlyHost host(pipe, options);

  Bytes raw(kStandardInquiryLength);
  const std::size_t got = host.execute(Inquiry{false, 0, kStandardInquiryLength, 0}, raw);
  const InquiryResponse inquiry = parse_inquiry(ConstByteSpan{raw}.first(got));
  if (inquiry.peripheral_qualifier != 0 || inquiry.peripheral_device_type != 0) {
    throw ScsiError(ErrorKind::kUnsupportedDevice,
                    "peripheral device type " + std::to_string(inquiry.peripheral_device_type) +
                        " is not a direct access block device");
  }
  if (inquiry.response_data_format != 2) {
    log().warn("host: INQUIRY response data format {} (expected 2)", inquiry.response_data_format);
  }

  std::optional<SenseData> last_sense;
  bool ready = false;
  for (int attempt = 0; attempt < options.ready_attempts; ++attempt) {
    try {
      host.execute(TestUnitReady{});
      ready = true;
      break;
    } catch (const ScsiError& e) {
      if (e.kind() != ErrorKind::kCommandFailed) {
        throw;
      }
      last_sense = e.sense();
      log().info("host: unit not ready (attempt {})", attempt + 1);
      if (options.ready_delay.count() > 0) {
        std::this_thread::sleep_for(options.ready_delay);
      }
    }
  }
  if (!ready) {
    throw ScsiError(ErrorKind::kNotReady,
                    "unit not ready after " + std::to_string(options.ready_attempts) + " attempts",
                    last_sense);
  }

  std::array<std::uint8_t, 8> cap_raw{};
  const std::size_t cap_got = host.execute(ReadCapacity10{}, cap_raw);
  const CapacityResponse capacity = parse_capacity(ConstByteSpan{cap_raw}.first(cap_got));
  if (capacity.block_length == 0) {
    throw Error(Layer::kScsi, ErrorKind::kProtocol, "device reports zero block length");
  }
  log().info("host: {} blocks of {} bytes", capacity.block_count(), capacity.block_length);
  return std::make_unique<ScsiBlockDevice>(std::move(host), inquiry, capacity);
}

}  // namespace umstk::scsi
