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

#include "umstk/target.hpp"

#include <algorithm>
#include <cstring>
#include <type_traits>

#include "umstk/log.hpp"

namespace umstk::scsi {

namespace {

// Additional sense codes used by the emulator.
constexpr std::uint8_t kAscInvalidOpcode = 0x20;
constexpr std::uint8_t kAscLbaOutOfRange = 0x21;
constexpr std::uint8_t kAscInvalidFieldInCdb = 0x24;
constexpr std::uint8_t kAscLunNotSupported = 0x25;
constexpr std::uint8_t kAscUnrecoveredReadError = 0x11;
constexpr std::uint8_t kAscWriteError = 0x0C;

enum class Flow { kNone, kIn, kOut };

struct Expectation {
  Flow flow = Flow::kNone;
  std::uint32_t length = 0;
};

std::uint32_t tag_of(ConstByteSpan raw)
{
  return raw.size() >= 8 ? load_le32(raw, 4) : 0;
}

}  // namespace

Fault Fault::force_status_on_command(std::uint32_t n, CswStatus status, std::uint8_t key)
{
  Fault f;
  f.action = Action::kForceStatus;
  f.command_number = n;
  f.status = status;
  f.sense_key = key;
  return f;
}

Fault Fault::force_status_on_opcode(std::uint8_t op, CswStatus status, std::uint8_t key)
{
  Fault f;
  f.action = Action::kForceStatus;
  f.opcode = op;
  f.status = status;
  f.sense_key = key;
  return f;
}

Fault Fault::stall_data_on_opcode(std::uint8_t op)
{
  Fault f;
  f.action = Action::kStallData;
  f.opcode = op;
  f.sense_key = sense_key::kAbortedCommand;
  return f;
}

Fault Fault::short_data_on_opcode(std::uint8_t op, std::uint32_t bytes, bool report_residue)
{
  Fault f;
  f.action = Action::kShortData;
  f.opcode = op;
  f.short_bytes = bytes;
  f.report_residue = report_residue;
  return f;
}

Fault Fault::fail_control(ControlRequest request)
{
  Fault f;
  f.action = Action::kFailControl;
  f.control = request;
  return f;
}

std::string to_string(const TargetEvent& e)
{
  switch (e.kind) {
    case TargetEvent::Kind::kCommand:
      return "CBW tag=" + std::to_string(e.tag) + " op=" + std::to_string(e.opcode) +
             " len=" + std::to_string(e.length);
    case TargetEvent::Kind::kDataIn:
      return "DATA-IN " + std::to_string(e.length);
    case TargetEvent::Kind::kDataOut:
      return "DATA-OUT " + std::to_string(e.length);
    case TargetEvent::Kind::kStatus:
      return "CSW tag=" + std::to_string(e.tag) +
             " status=" + std::to_string(static_cast<int>(e.status)) +
             " residue=" + std::to_string(e.length);
    case TargetEvent::Kind::kStallIn:
      return "STALL-IN";
    case TargetEvent::Kind::kStallOut:
      return "STALL-OUT";
    case TargetEvent::Kind::kControl:
      return "CONTROL " + std::string(umstk::to_string(e.request));
  }
  return "?";
}

TargetEmulator::TargetEmulator(BlockDevice& backing, TargetConfig config)
    : backing_(backing), config_(std::move(config)), pending_sense_(config_.max_lun + 1u)
{
}

void TargetEmulator::configure_faults(FaultPlan plan)
{
  faults_ = std::move(plan);
}

std::optional<SenseData> TargetEmulator::pending_sense(std::uint8_t lun) const
{
  if (lun >= pending_sense_.size()) {
    return std::nullopt;
  }
  return pending_sense_[lun];
}

std::optional<Fault> TargetEmulator::take_fault(std::uint8_t op)
{
  for (auto it = faults_.begin(); it != faults_.end(); ++it) {
    if (it->action == Fault::Action::kFailControl) {
      continue;
    }
    const bool by_number = it->command_number && *it->command_number == command_count_;
    const bool by_opcode = !it->command_number && it->opcode && *it->opcode == op;
    if (by_number || by_opcode) {
      Fault f = *it;
      faults_.erase(it);
      return f;
    }
  }
  return std::nullopt;
}

TargetEmulator::Outcome TargetEmulator::fail(std::uint8_t lun, std::uint8_t key, std::uint8_t asc,
                                             std::uint8_t ascq)
{
  SenseData sense;
  sense.sense_key = key;
  sense.additional_sense_code = asc;
  sense.additional_sense_code_qualifier = ascq;
  if (lun < pending_sense_.size()) {
    pending_sense_[lun] = sense;
  } else {
    // Unsupported LUNs report through LUN 0.
    pending_sense_[0] = sense;
  }
  return Outcome{std::nullopt, CswStatus::kFailed, 0};
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

TargetEmulator::Outcome TargetEmulator::execute(const CommandBlockWrapper& cbw,
                                                std::optional<ConstByteSpan> host_data)
{
  const std::uint8_t lun = cbw.lun;
  if (lun > config_.max_lun) {
    return fail(lun, sense_key::kIllegalRequest, kAscLunNotSupported);
  }
  const auto command = parse_scsi_command(cbw.command);
  if (!command) {
    return fail(lun, sense_key::kIllegalRequest, kAscInvalidOpcode);
  }

  const std::uint32_t bs = backing_.block_size();
  const std::uint64_t blocks = backing_.block_count();

  Expectation device = std::visit(
      [&](const auto& c) -> Expectation {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Inquiry>) {
          return {Flow::kIn, std::min<std::uint32_t>(c.allocation_length, kStandardInquiryLength)};
        } else if constexpr (std::is_same_v<T, TestUnitReady>) {
          return {Flow::kNone, 0};
        } else if constexpr (std::is_same_v<T, ReadCapacity10>) {
          return {Flow::kIn, 8};
        } else if constexpr (std::is_same_v<T, Read10>) {
          return {c.transfer_length ? Flow::kIn : Flow::kNone, c.transfer_length * bs};
        } else if constexpr (std::is_same_v<T, Write10>) {
          return {c.transfer_length ? Flow::kOut : Flow::kNone, c.transfer_length * bs};
        } else {
          return {Flow::kIn, std::min<std::uint32_t>(c.allocation_length, kFixedSenseLength)};
        }
      },
      *command);

  // Only the cases where host and device agree on direction, and the host offers at least as
  // much room as the device needs, are carried out. Everything else is a phase error.
  const std::uint32_t host_len = cbw.data_transfer_length;
  const Flow host_flow = host_len == 0 ? Flow::kNone : (cbw.data_in() ? Flow::kIn : Flow::kOut);
  const Outcome phase_error{std::nullopt, CswStatus::kPhaseError, 0};
  switch (device.flow) {
    case Flow::kNone:
      if (host_flow == Flow::kOut) {
        return phase_error;
      }
      break;
    case Flow::kIn:
      if (host_flow != Flow::kIn || host_len < device.length) {
        return phase_error;
      }
      break;
    case Flow::kOut:
      if (host_flow != Flow::kOut || host_len != device.length) {
        return phase_error;
      }
      break;
  }

  auto succeed = [&](std::optional<Bytes> data, std::uint32_t processed) {
    pending_sense_[lun].reset();
    return Outcome{std::move(data), CswStatus::kPassed, processed};
  };

  if (const auto* c = std::get_if<Inquiry>(&*command)) {
    if (c->evpd) {
      return fail(lun, sense_key::kIllegalRequest, kAscInvalidFieldInCdb);
    }
    InquiryResponse r;
    r.peripheral_device_type = config_.peripheral_device_type;
    r.removable = config_.removable;
    r.spc_version = config_.spc_version;
    r.response_data_format = 2;
    r.vendor = config_.vendor;
    r.product = config_.product;
    r.revision = config_.revision;
    Bytes data = serialize_inquiry(r);
    data.resize(device.length);
    return succeed(std::move(data), device.length);
  }
  if (std::holds_alternative<TestUnitReady>(*command)) {
    return succeed(std::nullopt, 0);
  }
  if (std::holds_alternative<ReadCapacity10>(*command)) {
    CapacityResponse r;
    r.last_lba = static_cast<std::uint32_t>(std::min<std::uint64_t>(blocks - 1, 0xFFFFFFFFu));
    r.block_length = bs;
    const auto raw = serialize_capacity(r);
    return succeed(Bytes(raw.begin(), raw.end()), 8);
  }
  if (const auto* c = std::get_if<Read10>(&*command)) {
    if (std::uint64_t{c->lba} + c->transfer_length > blocks) {
      return fail(lun, sense_key::kIllegalRequest, kAscLbaOutOfRange);
    }
    Bytes data(device.length);
    try {
      backing_.read_at(std::uint64_t{c->lba} * bs, data);
    } catch (const Error& e) {
      log().warn("target: backing read failed: {}", e.what());
      return fail(lun, sense_key::kMediumError, kAscUnrecoveredReadError);
    }
    return succeed(std::move(data), device.length);
  }
  if (const auto* c = std::get_if<Write10>(&*command)) {
    if (std::uint64_t{c->lba} + c->transfer_length > blocks) {
      return fail(lun, sense_key::kIllegalRequest, kAscLbaOutOfRange);
    }
    if (device.length != 0) {
      if (!host_data || host_data->size() < device.length) {
        return phase_error;
      }
      try {
        backing_.write_at(std::uint64_t{c->lba} * bs, host_data->first(device.length));
      } catch (const Error& e) {
        log().warn("target: backing write failed: {}", e.what());
        return fail(lun, sense_key::kMediumError, kAscWriteError);
      }
    }
    return succeed(std::nullopt, device.length);
  }

  // REQUEST SENSE reports and clears the pending condition; with none pending it reports NO SENSE.
  SenseData sense = pending_sense_[lun].value_or(SenseData{});
  pending_sense_[lun].reset();
  const auto raw = serialize_sense(sense);
  Bytes data(raw.begin(), raw.begin() + device.length);
  return Outcome{std::move(data), CswStatus::kPassed, device.length};
}

TargetEmulator::TransactionResult TargetEmulator::process_transaction(
    ConstByteSpan cbw_bytes, std::optional<ConstByteSpan> host_data)
{
  TransactionResult result;
  CommandBlockWrapper cbw;
  try {
    cbw = parse_cbw(cbw_bytes);
  } catch (const Error&) {
    result.csw = serialize_csw({tag_of(cbw_bytes), 0, CswStatus::kPhaseError});
    return result;
  }
  Outcome outcome = execute(cbw, host_data);
  const std::uint32_t processed = std::min(outcome.processed, cbw.data_transfer_length);
  result.device_data = std::move(outcome.data);
  result.csw = serialize_csw({cbw.tag, cbw.data_transfer_length - processed, outcome.status});
  return result;
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

void TargetEmulator::queue_status(std::uint32_t tag, CswStatus status, std::uint32_t residue)
{
  const auto raw = serialize_csw({tag, residue, status});
  in_queue_.emplace_back(raw.begin(), raw.end());
  events_.push_back({TargetEvent::Kind::kStatus, tag, 0, residue, status});
  if (status == CswStatus::kPhaseError) {
    needs_reset_ = true;
  }
}

void TargetEmulator::finish_in_command(const CommandBlockWrapper& cbw, std::optional<Fault> fault)
{
  const std::uint32_t host_len = cbw.data_transfer_length;
  const bool host_in = cbw.data_in() && host_len > 0;

  Outcome outcome;
  if (fault && fault->action == Fault::Action::kForceStatus) {
    outcome.status = fault->status;
    if (fault->status == CswStatus::kFailed) {
      fail(cbw.lun, fault->sense_key, 0);
    }
  } else if (fault && fault->action == Fault::Action::kStallData) {
    outcome.status = CswStatus::kFailed;
    fail(cbw.lun, fault->sense_key, 0);
  } else {
    outcome = execute(cbw, std::nullopt);
    if (fault && fault->action == Fault::Action::kShortData && outcome.data &&
        outcome.data->size() > fault->short_bytes) {
      outcome.data->resize(fault->short_bytes);
      outcome.processed = fault->report_residue ? fault->short_bytes : host_len;
    }
  }

  if (host_in) {
    if (outcome.data && !outcome.data->empty()) {
      events_.push_back({TargetEvent::Kind::kDataIn, cbw.tag, 0,
                         static_cast<std::uint32_t>(outcome.data->size())});
      in_queue_.push_back(std::move(*outcome.data));
    } else {
      // Nothing to send while the host waits for data: halt the IN endpoint.
      in_halted_ = true;
      events_.push_back({TargetEvent::Kind::kStallIn, cbw.tag});
    }
  }
  queue_status(cbw.tag, outcome.status, host_len - std::min(outcome.processed, host_len));
}

void TargetEmulator::finish_out_command()
{
  const CommandBlockWrapper& cbw = pending_cbw_;
  Outcome outcome;
  if (pending_fault_ && pending_fault_->action == Fault::Action::kForceStatus) {
    outcome.status = pending_fault_->status;
    if (outcome.status == CswStatus::kFailed) {
      fail(cbw.lun, pending_fault_->sense_key, 0);
    }
  } else {
    outcome = execute(cbw, ConstByteSpan{out_buffer_});
  }
  const std::uint32_t host_len = cbw.data_transfer_length;
  queue_status(cbw.tag, outcome.status, host_len - std::min(outcome.processed, host_len));
  pending_fault_.reset();
  out_buffer_.clear();
  phase_ = Phase::kCommand;
}

std::size_t TargetEmulator::receive(ConstByteSpan bytes)
{
  if (out_halted_) {
    throw Error(Layer::kTransport, ErrorKind::kStall, "bulk OUT endpoint is halted");
  }

  if (phase_ == Phase::kDataOut) {
    const std::size_t want = pending_cbw_.data_transfer_length - out_buffer_.size();
    const std::size_t n = std::min(want, bytes.size());
    out_buffer_.insert(out_buffer_.end(), bytes.begin(), bytes.begin() + n);
    events_.push_back({TargetEvent::Kind::kDataOut, pending_cbw_.tag, 0,
                       static_cast<std::uint32_t>(n)});
    if (out_buffer_.size() == pending_cbw_.data_transfer_length) {
      finish_out_command();
    }
    return n;
  }

  if (!in_queue_.empty()) {
    throw Error(Layer::kTransport, ErrorKind::kTransport,
                "new CBW while the previous transaction's status is undrained");
  }
  ++command_count_;

  if (needs_reset_) {
    // A device that reported a phase error answers nothing else until reset.
    queue_status(tag_of(bytes), CswStatus::kPhaseError, 0);
    return bytes.size();
  }

  CommandBlockWrapper cbw;
  try {
    cbw = parse_cbw(bytes);
  } catch (const Error& e) {
    log().debug("target: rejecting CBW: {}", e.what());
    queue_status(tag_of(bytes), CswStatus::kPhaseError, 0);
    return bytes.size();
  }

  const std::uint8_t op = cbw.command.front();
  events_.push_back({TargetEvent::Kind::kCommand, cbw.tag, op, cbw.data_transfer_length});
  std::optional<Fault> fault = take_fault(op);

  const bool host_out = !cbw.data_in() && cbw.data_transfer_length > 0;
  if (host_out) {
    if (fault && fault->action == Fault::Action::kStallData) {
      out_halted_ = true;
      events_.push_back({TargetEvent::Kind::kStallOut, cbw.tag});
      fail(cbw.lun, fault->sense_key, 0);
      queue_status(cbw.tag, CswStatus::kFailed, cbw.data_transfer_length);
      return bytes.size();
    }
    pending_cbw_ = std::move(cbw);
    pending_fault_ = fault;
    out_buffer_.clear();
    out_buffer_.reserve(pending_cbw_.data_transfer_length);
    phase_ = Phase::kDataOut;
    return bytes.size();
  }

  finish_in_command(cbw, fault);
  return bytes.size();
}

std::size_t TargetEmulator::transmit(ByteSpan out)
{
  if (in_halted_) {
    throw Error(Layer::kTransport, ErrorKind::kStall, "bulk IN endpoint is halted");
  }
  if (in_queue_.empty()) {
    throw Error(Layer::kTransport, ErrorKind::kTimeout, "no data pending on bulk IN endpoint");
  }
  const Bytes& front = in_queue_.front();
  const std::size_t n = std::min(out.size(), front.size() - in_offset_);
  std::memcpy(out.data(), front.data() + in_offset_, n);
  in_offset_ += n;
  if (in_offset_ == front.size()) {
    in_queue_.pop_front();
    in_offset_ = 0;
  }
  return n;
}

std::optional<std::uint8_t> TargetEmulator::control(ControlRequest request)
{
  for (auto it = faults_.begin(); it != faults_.end(); ++it) {
    if (it->action == Fault::Action::kFailControl && it->control == request) {
      faults_.erase(it);
      throw Error(Layer::kTransport, ErrorKind::kTransport,
                  "control request " + std::string(umstk::to_string(request)) + " failed");
    }
  }
  events_.push_back({TargetEvent::Kind::kControl, 0, 0, 0, CswStatus::kPassed, request});

  switch (request) {
    case ControlRequest::kBulkOnlyReset:
      in_queue_.clear();
      in_offset_ = 0;
      out_buffer_.clear();
      pending_fault_.reset();
      phase_ = Phase::kCommand;
      needs_reset_ = false;
      return std::nullopt;
    case ControlRequest::kGetMaxLun:
      return config_.max_lun;
    case ControlRequest::kClearHaltIn:
      in_halted_ = false;
      return std::nullopt;
    case ControlRequest::kClearHaltOut:
      out_halted_ = false;
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace umstk::scsi
