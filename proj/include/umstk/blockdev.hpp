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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>

#include "umstk/bytes.hpp"

namespace umstk {

// Block-addressed storage with a byte-granular access API.
//
// The addressable byte range is exactly block_size() * block_count(). Out-of-range access
// throws Error(kRange); backend failures throw Error(kIo). A device is single-owner and does no
// internal locking.
//
class BlockDevice
{
 public:
  BlockDevice() = default;
  BlockDevice(const BlockDevice&) = delete;
  BlockDevice& operator=(const BlockDevice&) = delete;
  virtual ~BlockDevice() = default;

  virtual std::uint32_t block_size() const = 0;
  virtual std::uint64_t block_count() const = 0;

  std::uint64_t size_bytes() const { return block_count() * block_size(); }

  void read_at(std::uint64_t byte_offset, ByteSpan out);
  Bytes read_at(std::uint64_t byte_offset, std::size_t length);
  void write_at(std::uint64_t byte_offset, ConstByteSpan data);

  // Pushes buffered state to the backing store. No-op for most devices.
  virtual void flush() {}

 protected:
  // Called with a range already checked against the device bounds.
  virtual void do_read(std::uint64_t byte_offset, ByteSpan out) = 0;
  virtual void do_write(std::uint64_t byte_offset, ConstByteSpan data) = 0;

 private:
  void check_range(std::uint64_t byte_offset, std::size_t length) const;
};

// Adapts a device that can only move whole blocks to the byte-granular API. Partial blocks at
// either end of a write are read, patched and written back.
class BlockAlignedDevice : public BlockDevice
{
 protected:
  virtual void read_blocks(std::uint64_t lba, ByteSpan out) = 0;
  virtual void write_blocks(std::uint64_t lba, ConstByteSpan data) = 0;

  void do_read(std::uint64_t byte_offset, ByteSpan out) override;
  void do_write(std::uint64_t byte_offset, ConstByteSpan data) override;
};

class MemoryDevice final : public BlockDevice
{
 public:
  MemoryDevice(std::uint64_t block_count, std::uint32_t block_size = 512);
  // Adopts an existing image; its length must be a multiple of block_size.
  explicit MemoryDevice(Bytes image, std::uint32_t block_size = 512);

  std::uint32_t block_size() const override { return block_size_; }
  std::uint64_t block_count() const override { return data_.size() / block_size_; }

  const Bytes& bytes() const { return data_; }

 protected:
  void do_read(std::uint64_t byte_offset, ByteSpan out) override;
  void do_write(std::uint64_t byte_offset, ConstByteSpan data) override;

 private:
  std::uint32_t block_size_;
  Bytes data_;
};

// Stores only blocks that were written with non-zero content; everything else reads as zero.
// Lets tests address multi-GiB volumes without allocating them.
class SparseMemoryDevice final : public BlockDevice
{
 public:
  SparseMemoryDevice(std::uint64_t block_count, std::uint32_t block_size = 512);

  std::uint32_t block_size() const override { return block_size_; }
  std::uint64_t block_count() const override { return block_count_; }

  std::size_t stored_blocks() const { return blocks_.size(); }

 protected:
  void do_read(std::uint64_t byte_offset, ByteSpan out) override;
  void do_write(std::uint64_t byte_offset, ConstByteSpan data) override;

 private:
  std::uint32_t block_size_;
  std::uint64_t block_count_;
  std::map<std::uint64_t, Bytes> blocks_;
};

struct OpenOptions {
  std::uint32_t block_size = 512;
  bool read_only = false;
  // When set, a missing file is created (or an existing one truncated) with this many bytes of
  // zeros.
  std::optional<std::uint64_t> create_size;
};

// Raw disk image on the host filesystem. No container header; image length must be a whole
// multiple of block_size.
class FileBackedDevice final : public BlockDevice
{
 public:
  ~FileBackedDevice() override;

  std::uint32_t block_size() const override { return block_size_; }
  std::uint64_t block_count() const override { return block_count_; }
  bool read_only() const { return read_only_; }
  const std::filesystem::path& path() const { return path_; }

  void flush() override;

 protected:
  void do_read(std::uint64_t byte_offset, ByteSpan out) override;
  void do_write(std::uint64_t byte_offset, ConstByteSpan data) override;

 private:
  friend std::unique_ptr<FileBackedDevice> open_image(const std::filesystem::path&, OpenOptions);

  FileBackedDevice(std::filesystem::path path, int fd, std::uint32_t block_size,
                   std::uint64_t block_count, bool read_only);

  std::filesystem::path path_;
  int fd_;
  std::uint32_t block_size_;
  std::uint64_t block_count_;
  bool read_only_;
};

std::unique_ptr<FileBackedDevice> open_image(const std::filesystem::path& path,
                                             OpenOptions options = {});

}  // namespace umstk
