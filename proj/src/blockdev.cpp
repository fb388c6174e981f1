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

#include "umstk/blockdev.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <memory>
#include <string>

#include "umstk/error.hpp"

namespace umstk {

namespace {

[[noreturn]] void range_error(std::uint64_t offset, std::size_t length, std::uint64_t size)
{
  throw Error(Layer::kBlockDevice, ErrorKind::kRange,
              "access [" + std::to_string(offset) + ", +" + std::to_string(length) +
                  ") outside device of " + std::to_string(size) + " bytes");
}

[[noreturn]] void io_error(const std::string& what)
{
  throw Error(Layer::kBlockDevice, ErrorKind::kIo, what + ": " + std::strerror(errno));
}

}  // namespace

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

void BlockDevice::check_range(std::uint64_t byte_offset, std::size_t length) const
{
  const std::uint64_t size = size_bytes();
  if (byte_offset > size || length > size - byte_offset) {
    range_error(byte_offset, length, size);
  }
}

void BlockDevice::read_at(std::uint64_t byte_offset, ByteSpan out)
{
  check_range(byte_offset, out.size());
  if (!out.empty()) {
    do_read(byte_offset, out);
  }
}

Bytes BlockDevice::read_at(std::uint64_t byte_offset, std::size_t length)
{
  check_range(byte_offset, length);
  Bytes out(length);
  if (length != 0) {
    do_read(byte_offset, out);
  }
  return out;
}

void BlockDevice::write_at(std::uint64_t byte_offset, ConstByteSpan data)
{
  check_range(byte_offset, data.size());
  if (!data.empty()) {
    do_write(byte_offset, data);
  }
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

void BlockAlignedDevice::do_read(std::uint64_t byte_offset, ByteSpan out)
{
  const std::uint32_t bs = block_size();
  const std::uint64_t first = byte_offset / bs;
  const std::uint64_t last = (byte_offset + out.size() - 1) / bs;
  const std::size_t head = byte_offset % bs;

  if (head == 0 && out.size() % bs == 0) {
    read_blocks(first, out);
    return;
  }
  Bytes scratch((last - first + 1) * bs);
  read_blocks(first, scratch);
  std::memcpy(out.data(), scratch.data() + head, out.size());
}

void BlockAlignedDevice::do_write(std::uint64_t byte_offset, ConstByteSpan data)
{
  const std::uint32_t bs = block_size();
  const std::uint64_t first = byte_offset / bs;
  const std::uint64_t last = (byte_offset + data.size() - 1) / bs;
  const std::size_t head = byte_offset % bs;

  if (head == 0 && data.size() % bs == 0) {
    write_blocks(first, data);
    return;
  }
  Bytes scratch((last - first + 1) * bs);
  ByteSpan whole{scratch};
  // Only the edge blocks need their old contents.
  read_blocks(first, whole.first(bs));
  if (last != first) {
    read_blocks(last, whole.last(bs));
  }
  std::memcpy(scratch.data() + head, data.data(), data.size());
  write_blocks(first, scratch);
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

MemoryDevice::MemoryDevice(std::uint64_t block_count, std::uint32_t block_size)
    : block_size_(block_size), data_(block_count * block_size, 0)
{
  if (block_size == 0) {
    throw Error(Layer::kBlockDevice, ErrorKind::kInvalidArgument, "block size must be positive");
  }
}

MemoryDevice::MemoryDevice(Bytes image, std::uint32_t block_size)
    : block_size_(block_size), data_(std::move(image))
{
  if (block_size == 0 || data_.size() % block_size != 0) {
    throw Error(Layer::kBlockDevice, ErrorKind::kInvalidArgument,
                "image length " + std::to_string(data_.size()) + " is not a multiple of block size " +
                    std::to_string(block_size));
  }
}

void MemoryDevice::do_read(std::uint64_t byte_offset, ByteSpan out)
{
  std::memcpy(out.data(), data_.data() + byte_offset, out.size());
}

void MemoryDevice::do_write(std::uint64_t byte_offset, ConstByteSpan data)
{
  std::memcpy(data_.data() + byte_offset, data.data(), data.size());
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

SparseMemoryDevice::SparseMemoryDevice(std::uint64_t block_count, std::uint32_t block_size)
    : block_size_(block_size), block_count_(block_count)
{
  if (block_size == 0) {
    throw Error(Layer::kBlockDevice, ErrorKind::kInvalidArgument, "block size must be positive");
  }
}

void SparseMemoryDevice::do_read(std::uint64_t byte_offset, ByteSpan out)
{
  std::size_t done = 0;
  while (done < out.size()) {
    const std::uint64_t pos = byte_offset + done;
    const std::uint64_t lba = pos / block_size_;
    const std::size_t in_block = pos % block_size_;
    const std::size_t n = std::min<std::size_t>(block_size_ - in_block, out.size() - done);
    auto it = blocks_.find(lba);
    if (it == blocks_.end()) {
      std::memset(out.data() + done, 0, n);
    } else {
      std::memcpy(out.data() + done, it->second.data() + in_block, n);
    }
    done += n;
  }
}

void SparseMemoryDevice::do_write(std::uint64_t byte_offset, ConstByteSpan data)
{
  std::size_t done = 0;
  while (done < data.size()) {
    const std::uint64_t pos = byte_offset + done;
    const std::uint64_t lba = pos / block_size_;
    const std::size_t in_block = pos % block_size_;
    const std::size_t n = std::min<std::size_t>(block_size_ - in_block, data.size() - done);
    auto it = blocks_.find(lba);
    if (it == blocks_.end()) {
      const bool all_zero = std::all_of(data.begin() + done, data.begin() + done + n,
                                        [](std::uint8_t b) { return b == 0; });
      if (!all_zero) {
        it = blocks_.emplace(lba, Bytes(block_size_, 0)).first;
      }
    }
    if (it != blocks_.end()) {
      std::memcpy(it->second.data() + in_block, data.data() + done, n);
      if (std::all_of(it->second.begin(), it->second.end(), [](std::uint8_t b) { return b == 0; })) {
        blocks_.erase(it);
      }
    }
    done += n;
  }
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

FileBackedDevice::FileBackedDevice(std::filesystem::path path, int fd, std::uint32_t block_size,
                                   std::uint64_t block_count, bool read_only)
    : path_(std::move(path)),
      fd_(fd),
      block_size_(block_size),
      block_count_(block_count),
      read_only_(read_only)
{
}

FileBackedDevice::~FileBackedDevice()
{
  if (fd_ >= 0) {
    ::close(fd_);
  }
}

void FileBackedDevice::flush()
{
  if (!read_only_ && ::fsync(fd_) != 0) {
    io_error("fsync " + path_.string());
  }
}

void FileBackedDevice::do_read(std::uint64_t byte_offset, ByteSpan out)
{
  std::size_t done = 0;
  while (done < out.size()) {
    const ssize_t n = ::pread(fd_, out.data() + done, out.size() - done,
                              static_cast<off_t>(byte_offset + done));
    if (n < 0) {
      if (errno == EINTR) {
        continue;
      }
      io_error("read " + path_.string());
    }
    if (n == 0) {
      errno = EIO;
      io_error("unexpected end of image " + path_.string());
    }
    done += static_cast<std::size_t>(n);
  }
}

void FileBackedDevice::do_write(std::uint64_t byte_offset, ConstByteSpan data)
{
  if (read_only_) {
    throw Error(Layer::kBlockDevice, ErrorKind::kPermission,
                "image " + path_.string() + " is opened read-only");
  }
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::pwrite(fd_, data.data() + done, data.size() - done,
                               static_cast<off_t>(byte_offset + done));
    if (n < 0) {
      if (errno == EINTR) {
        continue;
      }
      io_error("write " + path_.string());
    }
    done += static_cast<std::size_t>(n);
  }
}

std::unique_ptr<FileBackedDevice> open_image(const std::filesystem::path& path, OpenOptions options)
{
  if (options.block_size == 0) {
    throw Error(Layer::kBlockDevice, ErrorKind::kInvalidArgument, "block size must be positive");
  }
  if (options.create_size && options.read_only) {
    throw Error(Layer::kBlockDevice, ErrorKind::kInvalidArgument,
                "cannot create an image read-only");
  }
  if (options.create_size && *options.create_size % options.block_size != 0) {
    throw Error(Layer::kBlockDevice, ErrorKind::kInvalidArgument,
                "requested size is not a multiple of the block size");
  }

  int flags = options.read_only ? O_RDONLY : O_RDWR;
  if (options.create_size) {
    flags |= O_CREAT | O_TRUNC;
  }
  const int fd = ::open(path.c_str(), flags | O_CLOEXEC, 0644);
  if (fd < 0) {
    const ErrorKind kind = errno == EACCES ? ErrorKind::kPermission : ErrorKind::kIo;
    throw Error(Layer::kBlockDevice, kind,
                "cannot open " + path.string() + ": " + std::strerror(errno));
  }
  struct FdGuard {
    int fd;
    ~FdGuard()
    {
      if (fd >= 0) {
        ::close(fd);
      }
    }
  } guard{fd};

  if (options.create_size && ::ftruncate(fd, static_cast<off_t>(*options.create_size)) != 0) {
    io_error("resize " + path.string());
  }

  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    io_error("stat " + path.string());
  }
  const auto size = static_cast<std::uint64_t>(st.st_size);
  if (size % options.block_size != 0) {
    throw Error(Layer::kBlockDevice, ErrorKind::kInvalidArgument,
                "image " + path.string() + " length " + std::to_string(size) +
                    " is not a multiple of block size " + std::to_string(options.block_size));
  }

  guard.fd = -1;
  return std::unique_ptr<FileBackedDevice>(new FileBackedDevice(
      path, fd, options.block_size, size / options.block_size, options.read_only));
}

}  // namespace umstk
