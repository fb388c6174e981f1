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
#include <set>
#include <vector>

#include "umstk/blockdev.hpp"
#include "umstk/fat32/layout.hpp"

namespace umstk::fat32 {

// In-memory copy of the active FAT plus the FSInfo counters. Mutations are buffered per sector
// until flush(), which writes every FAT copy when mirroring is on and only the active copy
// otherwise.
class Fat
{
 public:
  Fat(BlockDevice& device, const BootSector& boot);

  std::uint32_t entry_count() const { return entry_count_; }

  // Low 28 bits of an entry.
  std::uint32_t get(std::uint32_t cluster) const;
  // Stores the low 28 bits, keeping the reserved top nibble of the existing entry.
  void set(std::uint32_t cluster, std::uint32_t value);

  // Clusters from start to the end-of-chain mark. Throws Error(kCorruptChain) on links to free,
  // reserved, bad or out-of-range entries and on cycles.
  std::vector<std::uint32_t> get_chain(std::uint32_t start) const;

  // Appends count clusters to chain and returns the extended list. Either all clusters are
  // allocated or nothing changes (Error(kNoSpace)).
  std::vector<std::uint32_t> alloc(std::vector<std::uint32_t> chain, std::uint32_t count);

  // Releases chain[keep..] and end-marks chain[keep - 1].
  std::vector<std::uint32_t> free(std::vector<std::uint32_t> chain, std::size_t keep);

  std::uint32_t free_count() const { return free_count_; }
  std::uint32_t next_free() const { return next_free_; }
  // FSInfo as found at mount time.
  const FsInfo& mounted_fsinfo() const { return mounted_fsinfo_; }

  bool dirty() const { return !dirty_sectors_.empty() || fsinfo_dirty_; }
  void flush();

 private:
  void mark_dirty(std::uint32_t cluster);
  void write_fsinfo();

  BlockDevice& device_;
  BootSector boot_;
  Bytes table_;
  std::uint32_t entry_count_;
  std::uint32_t free_count_ = 0;
  std::uint32_t next_free_ = kUnknown;
  FsInfo mounted_fsinfo_;
  std::set<std::uint32_t> dirty_sectors_;
  bool fsinfo_dirty_ = false;
};

// A file or directory body. Start cluster 0 denotes an empty chain.
class ClusterChain
{
 public:
  ClusterChain(BlockDevice& device, const BootSector& boot, Fat& fat, std::uint32_t start_cluster);

  std::uint32_t start_cluster() const { return clusters_.empty() ? 0 : clusters_.front(); }
  const std::vector<std::uint32_t>& clusters() const { return clusters_; }
  std::uint32_t cluster_size() const { return cluster_size_; }
  std::uint64_t capacity() const { return std::uint64_t{cluster_size_} * clusters_.size(); }

  // Throws Error(kRange) past capacity.
  void read(std::uint64_t offset, ByteSpan out);
  Bytes read_all();
  // Grows the chain when the range ends past capacity.
  void write(std::uint64_t offset, ConstByteSpan data);

  // Resizes to ceil(bytes / cluster_size) clusters, but never below min_clusters. Newly
  // allocated clusters are zero filled.
  void set_length(std::uint64_t bytes, std::size_t min_clusters = 0);

 private:
  template <typename Fn>
  void for_each_extent(std::uint64_t offset, std::uint64_t length, Fn&& fn);

  BlockDevice& device_;
  const BootSector& boot_;
  Fat& fat_;
  std::uint32_t cluster_size_;
  std::vector<std::uint32_t> clusters_;
};

}  // namespace umstk::fat32
