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

#include "umstk/fat32/fat.hpp"

#include <algorithm>
#include <string>

#include "umstk/error.hpp"
#include "umstk/log.hpp"

namespace umstk::fat32 {

namespace {

[[noreturn]] void corrupt(const std::string& why)
{
  throw Error(Layer::kFat32, ErrorKind::kCorruptChain, why);
}

}  // namespace

Fat::Fat(BlockDevice& device, const BootSector& boot)
    : device_(device), boot_(boot), entry_count_(boot.fat_entry_count())
{
  const std::uint32_t copy = boot_.mirroring() ? 0 : boot_.active_fat();
  const std::uint64_t start =
      (std::uint64_t{boot_.fat_region_start()} + std::uint64_t{copy} * boot_.fat_size_sectors) *
      boot_.bytes_per_sector;
  table_ = device_.read_at(start, std::uint64_t{boot_.fat_size_sectors} * boot_.bytes_per_sector);

  for (std::uint32_t c = kFirstDataCluster; c < entry_count_; ++c) {
    if (get(c) == kFree) {
      ++free_count_;
    }
  }

  const Bytes fs_sector = device_.read_at(
      std::uint64_t{boot_.fsinfo_sector} * boot_.bytes_per_sector, boot_.bytes_per_sector);
  mounted_fsinfo_ = parse_fsinfo(fs_sector);
  next_free_ = mounted_fsinfo_.next_free;
  if (!mounted_fsinfo_.signatures_valid) {
    log().warn("fat32: FSInfo signatures invalid, free count recomputed as {}", free_count_);
    fsinfo_dirty_ = true;
  } else if (mounted_fsinfo_.free_count != free_count_) {
    log().warn("fat32: FSInfo free count {} disagrees with FAT scan {}", mounted_fsinfo_.free_count,
               free_count_);
    fsinfo_dirty_ = true;
  }
}

std::uint32_t Fat::get(std::uint32_t cluster) const
{
  if (cluster >= entry_count_) {
    throw Error(Layer::kFat32, ErrorKind::kRange,
                "FAT entry " + std::to_string(cluster) + " beyond " + std::to_string(entry_count_));
  }
  return load_le32(table_, std::size_t{cluster} * 4) & kEntryMask;
}

void Fat::set(std::uint32_t cluster, std::uint32_t value)
{
  if (cluster >= entry_count_) {
    throw Error(Layer::kFat32, ErrorKind::kRange,
                "FAT entry " + std::to_string(cluster) + " beyond " + std::to_string(entry_count_));
  }
  const std::size_t at = std::size_t{cluster} * 4;
  const std::uint32_t old = load_le32(table_, at);
  store_le32(table_, at, (old & ~kEntryMask) | (value & kEntryMask));
  mark_dirty(cluster);
}

void Fat::mark_dirty(std::uint32_t cluster)
{
  dirty_sectors_.insert(static_cast<std::uint32_t>(std::uint64_t{cluster} * 4 /
                                                   boot_.bytes_per_sector));
}

std::vector<std::uint32_t> Fat::get_chain(std::uint32_t start) const
{
  if (start < kFirstDataCluster || start >= entry_count_) {
    corrupt("start cluster " + std::to_string(start) + " out of range");
  }
  std::vector<std::uint32_t> chain;
  std::uint32_t c = start;
  while (true) {
    const std::uint32_t next = get(c);
    if (next == kFree || next == kReserved || next == kBad) {
      corrupt("cluster " + std::to_string(c) + " in chain from " + std::to_string(start) +
              " is marked " + (next == kFree ? "free" : next == kBad ? "bad" : "reserved"));
    }
    chain.push_back(c);
    if (chain.size() >= entry_count_) {
      corrupt("chain from cluster " + std::to_string(start) + " loops");
    }
    if (is_end_of_chain(next)) {
      return chain;
    }
    if (next < kFirstDataCluster || next >= entry_count_) {
      corrupt("cluster " + std::to_string(c) + " links to " + std::to_string(next) +
              " outside the FAT");
    }
    c = next;
  }
}

std::vector<std::uint32_t> Fat::alloc(std::vector<std::uint32_t> chain, std::uint32_t count)
{
  if (count == 0) {
    return chain;
  }
  if (count > free_count_) {
    throw Error(Layer::kFat32, ErrorKind::kNoSpace,
                "need " + std::to_string(count) + " clusters, " + std::to_string(free_count_) +
                    " free");
  }
  // next_free names the last cluster handed out; it is only a hint.
  std::uint32_t first = kFirstDataCluster;
  if (next_free_ >= kFirstDataCluster && next_free_ < entry_count_) {
    first = next_free_ + 1;
  }
  const std::uint32_t span = entry_count_ - kFirstDataCluster;
  std::vector<std::uint32_t> fresh;
  fresh.reserve(count);
  for (std::uint32_t i = 0; i < span && fresh.size() < count; ++i) {
    std::uint32_t c = first + i;
    if (c >= entry_count_) {
      c -= span;
    }
    if (get(c) == kFree) {
      fresh.push_back(c);
    }
  }
  if (fresh.size() < count) {
    // Free count was stale; nothing has been modified yet.
    throw Error(Layer::kFat32, ErrorKind::kNoSpace, "FAT has fewer free entries than counted");
  }

  if (!chain.empty()) {
    set(chain.back(), fresh.front());
  }
  for (std::size_t i = 0; i + 1 < fresh.size(); ++i) {
    set(fresh[i], fresh[i + 1]);
  }
  set(fresh.back(), kEndOfChain);
  free_count_ -= count;
  next_free_ = fresh.back();
  fsinfo_dirty_ = true;
  chain.insert(chain.end(), fresh.begin(), fresh.end());
  return chain;
}

std::vector<std::uint32_t> Fat::free(std::vector<std::uint32_t> chain, std::size_t keep)
{
  if (keep >= chain.size()) {
    return chain;
  }
  for (std::size_t i = keep; i < chain.size(); ++i) {
    set(chain[i], kFree);
  }
  if (keep > 0) {
    set(chain[keep - 1], kEndOfChain);
  }
  free_count_ += static_cast<std::uint32_t>(chain.size() - keep);
  fsinfo_dirty_ = true;
  chain.resize(keep);
  return chain;
}

void Fat::flush()
{
  const std::uint32_t bps = boot_.bytes_per_sector;
  for (std::uint8_t copy = 0; copy < boot_.num_fats; ++copy) {
    if (!boot_.mirroring() && copy != boot_.active_fat()) {
      continue;
    }
    const std::uint64_t base =
        std::uint64_t{boot_.fat_region_start()} + std::uint64_t{copy} * boot_.fat_size_sectors;
    for (std::uint32_t sector : dirty_sectors_) {
      device_.write_at((base + sector) * bps,
                       ConstByteSpan{table_.data() + std::size_t{sector} * bps, bps});
    }
  }
  dirty_sectors_.clear();
  if (fsinfo_dirty_) {
    write_fsinfo();
    fsinfo_dirty_ = false;
  }
}

void Fat::write_fsinfo()
{
  const std::uint32_t bps = boot_.bytes_per_sector;
  FsInfo info;
  info.free_count = free_count_;
  info.next_free = next_free_;

  std::vector<std::uint64_t> sectors{boot_.fsinfo_sector};
  if (boot_.backup_boot_sector != 0 &&
      std::uint32_t{boot_.backup_boot_sector} + boot_.fsinfo_sector < boot_.reserved_sector_count) {
    sectors.push_back(std::uint64_t{boot_.backup_boot_sector} + boot_.fsinfo_sector);
  }
  for (std::uint64_t s : sectors) {
    Bytes sector = device_.read_at(s * bps, bps);
    patch_fsinfo(sector, info);
    device_.write_at(s * bps, sector);
  }
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

ClusterChain::ClusterChain(BlockDevice& device, const BootSector& boot, Fat& fat,
                           std::uint32_t start_cluster)
    : device_(device), boot_(boot), fat_(fat), cluster_size_(boot.cluster_size())
{
  if (start_cluster != 0) {
    clusters_ = fat_.get_chain(start_cluster);
  }
}

template <typename Fn>
void ClusterChain::for_each_extent(std::uint64_t offset, std::uint64_t length, Fn&& fn)
{
  std::uint64_t done = 0;
  while (done < length) {
    const std::uint64_t pos = offset + done;
    std::size_t index = static_cast<std::size_t>(pos / cluster_size_);
    const std::uint64_t within = pos % cluster_size_;
    std::uint64_t run = std::min<std::uint64_t>(cluster_size_ - within, length - done);
    // Merge physically adjacent clusters into one device request.
    while (done + run < length && index + 1 < clusters_.size() &&
           clusters_[index + 1] == clusters_[index] + 1) {
      ++index;
      run += std::min<std::uint64_t>(cluster_size_, length - done - run);
    }
    const std::uint32_t first_cluster = clusters_[pos / cluster_size_];
    fn(cluster_to_byte_offset(boot_, first_cluster) + within, done, run);
    done += run;
  }
}

void ClusterChain::read(std::uint64_t offset, ByteSpan out)
{
  if (offset > capacity() || out.size() > capacity() - offset) {
    throw Error(Layer::kFat32, ErrorKind::kRange,
                "read of " + std::to_string(out.size()) + " bytes at " + std::to_string(offset) +
                    " past chain capacity " + std::to_string(capacity()));
  }
  for_each_extent(offset, out.size(), [&](std::uint64_t dev, std::uint64_t at, std::uint64_t n) {
    device_.read_at(dev, out.subspan(at, n));
  });
}

Bytes ClusterChain::read_all()
{
  Bytes out(capacity());
  read(0, out);
  return out;
}

void ClusterChain::write(std::uint64_t offset, ConstByteSpan data)
{
  const std::uint64_t end = offset + data.size();
  if (end > capacity()) {
    set_length(end);
  }
  for_each_extent(offset, data.size(), [&](std::uint64_t dev, std::uint64_t at, std::uint64_t n) {
    device_.write_at(dev, data.subspan(at, n));
  });
}

void ClusterChain::set_length(std::uint64_t bytes, std::size_t min_clusters)
{
  const std::uint64_t wanted64 =
      std::max<std::uint64_t>((bytes + cluster_size_ - 1) / cluster_size_, min_clusters);
  if (wanted64 > fat_.entry_count()) {
    throw Error(Layer::kFat32, ErrorKind::kNoSpace,
                "chain of " + std::to_string(wanted64) + " clusters cannot fit the volume");
  }
  const std::size_t wanted = static_cast<std::size_t>(wanted64);
  const std::size_t have = clusters_.size();
  if (wanted < have) {
    clusters_ = fat_.free(std::move(clusters_), wanted);
    return;
  }
  if (wanted == have) {
    return;
  }
  clusters_ = fat_.alloc(std::move(clusters_), static_cast<std::uint32_t>(wanted - have));

  const Bytes zeros(std::min<std::uint64_t>(std::uint64_t{cluster_size_} * 32, 1u << 20), 0);
  const std::uint64_t from = std::uint64_t{have} * cluster_size_;
  for_each_extent(from, capacity() - from, [&](std::uint64_t dev, std::uint64_t, std::uint64_t n) {
    for (std::uint64_t off = 0; off < n; off += zeros.size()) {
      const std::size_t len = static_cast<std::size_t>(std::min<std::uint64_t>(zeros.size(), n - off));
      device_.write_at(dev + off, ConstByteSpan{zeros.data(), len});
    }
  });
}

}  // namespace umstk::fat32
