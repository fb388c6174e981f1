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

#include <random>

#include "harness.hpp"
#include "oracles.hpp"
#include "umstk/fat32/fat.hpp"

namespace umstk::fat32 {
namespace {

using testing::error_kind;
using testing::random_bytes;

// Records every byte range written through it.
class WriteLog final : public BlockDevice
{
 public:
  explicit WriteLog(BlockDevice& inner) : inner_(inner) {}

  std::uint32_t block_size() const override { return inner_.block_size(); }
  std::uint64_t block_count() const override { return inner_.block_count(); }

  std::vector<std::pair<std::uint64_t, std::uint64_t>> writes;
  std::uint64_t reads = 0;

 protected:
  void do_read(std::uint64_t at, ByteSpan out) override
  {
    ++reads;
    inner_.read_at(at, out);
  }
  void do_write(std::uint64_t at, ConstByteSpan data) override
  {
    writes.emplace_back(at, data.size());
    inner_.write_at(at, data);
  }

 private:
  BlockDevice& inner_;
};

class FatTest : public ::testing::Test
{
 protected:
  FatTest() : vol(8 << 20, 1) { vol.fs.reset(); }

  BootSector boot() { return parse_boot_sector(vol.device.read_at(0, 512)); }

  testing::Volume vol;
};

TEST_F(FatTest, FreshVolumeCounts)
{
  const BootSector b = boot();
  Fat fat(vol.device, b);
  const auto scan = oracle::scan_fat(vol.device.bytes());
  EXPECT_EQ(fat.entry_count(), b.cluster_count() + 2);
  EXPECT_EQ(fat.free_count(), scan.zero_entries);
  EXPECT_EQ(fat.free_count(), b.cluster_count() - 1);
  EXPECT_EQ(fat.mounted_fsinfo().free_count, scan.zero_entries);
  EXPECT_TRUE(is_end_of_chain(fat.get(b.root_cluster)));
  EXPECT_EQ(fat.get_chain(b.root_cluster), std::vector<std::uint32_t>{b.root_cluster});
  EXPECT_FALSE(fat.dirty());
}

TEST_F(FatTest, AllocBuildsLinkedChain)
{
  Fat fat(vol.device, boot());
  const std::uint32_t before = fat.free_count();
  const auto chain = fat.alloc({}, 5);
  ASSERT_EQ(chain.size(), 5u);
  EXPECT_EQ(fat.free_count(), before - 5);
  EXPECT_EQ(fat.get_chain(chain.front()), chain);
  EXPECT_EQ(fat.next_free(), chain.back());
  const auto longer = fat.alloc(chain, 3);
  EXPECT_EQ(fat.get_chain(chain.front()), longer);
  EXPECT_EQ(longer.size(), 8u);
}

TEST_F(FatTest, AllocIsAllOrNothing)
{
  Fat fat(vol.device, boot());
  const std::uint32_t before = fat.free_count();
  const Bytes table_before = vol.device.bytes();
  EXPECT_EQ(error_kind([&] { fat.alloc({}, before + 1); }), ErrorKind::kNoSpace);
  EXPECT_EQ(fat.free_count(), before);
  EXPECT_FALSE(fat.dirty());
  const auto all = fat.alloc({}, before);
  EXPECT_EQ(all.size(), before);
  EXPECT_EQ(fat.free_count(), 0u);
  EXPECT_EQ(error_kind([&] { fat.alloc(all, 1); }), ErrorKind::kNoSpace);
}

TEST_F(FatTest, FreeReleasesTail)
{
  Fat fat(vol.device, boot());
  const std::uint32_t before = fat.free_count();
  auto chain = fat.alloc({}, 6);
  chain = fat.free(chain, 2);
  ASSERT_EQ(chain.size(), 2u);
  EXPECT_TRUE(is_end_of_chain(fat.get(chain[1])));
  EXPECT_EQ(fat.free_count(), before - 2);
  chain = fat.free(chain, 0);
  EXPECT_TRUE(chain.empty());
  EXPECT_EQ(fat.free_count(), before);
}

TEST_F(FatTest, SetKeepsReservedNibble)
{
  const BootSector b = boot();
  const std::uint64_t at = std::uint64_t{b.fat_region_start()} * 512 + 4 * 10;
  vol.device.write_at(at, Bytes{0, 0, 0, 0xF0});
  Fat fat(vol.device, b);
  EXPECT_EQ(fat.get(10), 0u);
  fat.set(10, 0xFFFFFFFF);
  EXPECT_EQ(fat.get(10), kEndOfChain);
  fat.flush();
  EXPECT_EQ(vol.device.read_at(at, 4), (Bytes{0xFF, 0xFF, 0xFF, 0xFF}));
  fat.set(10, 0x00000123);
  fat.flush();
  EXPECT_EQ(vol.device.read_at(at, 4), (Bytes{0x23, 0x01, 0x00, 0xF0}));
}

TEST_F(FatTest, OutOfRangeEntries)
{
  Fat fat(vol.device, boot());
  EXPECT_EQ(error_kind([&] { fat.get(fat.entry_count()); }), ErrorKind::kRange);
  EXPECT_EQ(error_kind([&] { fat.set(fat.entry_count(), 0); }), ErrorKind::kRange);
}

TEST_F(FatTest, CorruptChains)
{
  Fat fat(vol.device, boot());
  fat.set(20, 21);
  fat.set(21, kFree);
  EXPECT_EQ(error_kind([&] { fat.get_chain(20); }), ErrorKind::kCorruptChain);
  fat.set(21, kBad);
  EXPECT_EQ(error_kind([&] { fat.get_chain(20); }), ErrorKind::kCorruptChain);
  fat.set(21, 20);
  EXPECT_EQ(error_kind([&] { fat.get_chain(20); }), ErrorKind::kCorruptChain);
  fat.set(21, fat.entry_count() + 5);
  EXPECT_EQ(error_kind([&] { fat.get_chain(20); }), ErrorKind::kCorruptChain);
  fat.set(21, kReserved);
  EXPECT_EQ(error_kind([&] { fat.get_chain(20); }), ErrorKind::kCorruptChain);
  EXPECT_EQ(error_kind([&] { fat.get_chain(1); }), ErrorKind::kCorruptChain);
  EXPECT_EQ(error_kind([&] { fat.get_chain(0); }), ErrorKind::kCorruptChain);
}

TEST_F(FatTest, EveryEndMarkTerminates)
{
  Fat fat(vol.device, boot());
  for (std::uint32_t mark = 0x0FFFFFF8; mark <= 0x0FFFFFFF; ++mark) {
    fat.set(30, 31);
    fat.set(31, mark);
    EXPECT_EQ(fat.get_chain(30), (std::vector<std::uint32_t>{30, 31}));
  }
}

TEST_F(FatTest, FlushMirrorsBothCopies)
{
  const BootSector b = boot();
  Fat fat(vol.device, b);
  fat.alloc({}, 40);
  EXPECT_TRUE(fat.dirty());
  fat.flush();
  EXPECT_FALSE(fat.dirty());
  const auto scan = oracle::scan_fat(vol.device.bytes());
  EXPECT_TRUE(scan.copies_identical);
  EXPECT_EQ(scan.fsinfo_free, scan.zero_entries);
  EXPECT_EQ(scan.fsinfo_free, fat.free_count());
  const FsInfo backup = parse_fsinfo(
      vol.device.read_at((std::uint64_t{b.backup_boot_sector} + b.fsinfo_sector) * 512, 512));
  EXPECT_EQ(backup.free_count, fat.free_count());
}

TEST_F(FatTest, FlushWritesOnlyDirtySectors)
{
  const BootSector b = boot();
  WriteLog log(vol.device);
  Fat fat(log, b);
  fat.set(5, kEndOfChain);
  fat.set(200, kEndOfChain);
  fat.flush();
  std::size_t fat_writes = 0;
  for (auto [at, len] : log.writes) {
    if (at >= std::uint64_t{b.fat_region_start()} * 512 &&
        at < std::uint64_t{b.data_region_start()} * 512) {
      ++fat_writes;
      EXPECT_EQ(len, 512u);
    }
  }
  EXPECT_EQ(fat_writes, 4u);
}

TEST_F(FatTest, NonMirroredTouchesOnlyActiveCopy)
{
  BootSector b = boot();
  b.ext_flags = 0x81;
  Bytes sector = vol.device.read_at(0, 512);
  patch_boot_sector(sector, b);
  vol.device.write_at(0, sector);
  const Bytes copy0 = vol.device.read_at(std::uint64_t{b.fat_region_start()} * 512,
                                         std::size_t{b.fat_size_sectors} * 512);
  Fat fat(vol.device, parse_boot_sector(vol.device.read_at(0, 512)));
  fat.alloc({}, 3);
  fat.flush();
  EXPECT_EQ(vol.device.read_at(std::uint64_t{b.fat_region_start()} * 512, copy0.size()), copy0);
  const Bytes copy1 = vol.device.read_at(
      (std::uint64_t{b.fat_region_start()} + b.fat_size_sectors) * 512, copy0.size());
  EXPECT_NE(copy1, copy0);
}

TEST_F(FatTest, StaleFsInfoRecomputed)
{
  const BootSector b = boot();
  Bytes fs = vol.device.read_at(512, 512);
  patch_fsinfo(fs, FsInfo{12345, 99, true});
  vol.device.write_at(512, fs);
  Fat fat(vol.device, b);
  EXPECT_EQ(fat.mounted_fsinfo().free_count, 12345u);
  EXPECT_EQ(fat.free_count(), b.cluster_count() - 1);
  EXPECT_TRUE(fat.dirty());
  fat.flush();
  EXPECT_EQ(parse_fsinfo(vol.device.read_at(512, 512)).free_count, b.cluster_count() - 1);
}

TEST_F(FatTest, AllocWrapsAroundHint)
{
  const BootSector b = boot();
  Fat fat(vol.device, b);
  const std::uint32_t last = fat.entry_count() - 1;
  Bytes fs = vol.device.read_at(512, 512);
  patch_fsinfo(fs, FsInfo{fat.free_count(), last, true});
  vol.device.write_at(512, fs);
  Fat hinted(vol.device, b);
  const auto chain = hinted.alloc({}, 1);
  EXPECT_EQ(chain.front(), b.root_cluster + 1);
}

TEST_F(FatTest, RandomAllocFreeConservesClusters)
{
  Fat fat(vol.device, boot());
  const std::uint32_t total_free = fat.free_count();
  std::mt19937 rng(17);
  std::vector<std::vector<std::uint32_t>> chains;
  for (int step = 0; step < 400; ++step) {
    if (chains.empty() || rng() % 3 != 0) {
      auto c = fat.alloc({}, 1 + rng() % 20);
      chains.push_back(std::move(c));
    } else {
      const std::size_t k = rng() % chains.size();
      auto& c = chains[k];
      c = fat.free(c, rng() % (c.size() + 1));
      if (c.empty()) {
        chains.erase(chains.begin() + static_cast<std::ptrdiff_t>(k));
      }
    }
    std::uint32_t used = 0;
    std::set<std::uint32_t> owned;
    for (const auto& c : chains) {
      used += static_cast<std::uint32_t>(c.size());
      for (std::uint32_t x : c) ASSERT_TRUE(owned.insert(x).second);
      ASSERT_EQ(fat.get_chain(c.front()), c);
    }
    ASSERT_EQ(fat.free_count() + used, total_free);
  }
  fat.flush();
  EXPECT_EQ(oracle::scan_fat(vol.device.bytes()).zero_entries, fat.free_count());
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -
// Cluster chains

TEST_F(FatTest, ChainWriteReadAcrossClusters)
{
  const BootSector b = boot();
  Fat fat(vol.device, b);
  ClusterChain chain(vol.device, b, fat, 0);
  EXPECT_EQ(chain.start_cluster(), 0u);
  EXPECT_EQ(chain.capacity(), 0u);
  const Bytes data = random_bytes(5000, 1);
  chain.write(100, data);
  EXPECT_EQ(chain.clusters().size(), 10u);
  Bytes back(5000);
  chain.read(100, back);
  EXPECT_EQ(back, data);
  Bytes head(100);
  chain.read(0, head);
  EXPECT_EQ(head, Bytes(100, 0));

  ClusterChain reopened(vol.device, b, fat, chain.start_cluster());
  EXPECT_EQ(reopened.clusters(), chain.clusters());
  EXPECT_EQ(error_kind([&] {
              Bytes one(1);
              reopened.read(reopened.capacity(), one);
            }),
            ErrorKind::kRange);
}

TEST_F(FatTest, ChainDataLandsAtClusterOffsets)
{
  const BootSector b = boot();
  Fat fat(vol.device, b);
  ClusterChain chain(vol.device, b, fat, 0);
  const Bytes data = random_bytes(3 * 512, 2);
  chain.write(0, data);
  for (std::size_t i = 0; i < 3; ++i) {
    const std::uint64_t off =
        (std::uint64_t{b.data_region_start()} + (chain.clusters()[i] - 2) * b.sectors_per_cluster) *
        512;
    EXPECT_EQ(vol.device.read_at(off, 512), Bytes(data.begin() + i * 512, data.begin() + (i + 1) * 512));
  }
}

TEST_F(FatTest, FragmentedChainReadsBack)
{
  const BootSector b = boot();
  Fat fat(vol.device, b);
  auto a = fat.alloc({}, 1);
  auto gap = fat.alloc({}, 1);
  a = fat.alloc(a, 1);
  fat.free(gap, 0);
  a = fat.alloc(a, 2);
  ClusterChain chain(vol.device, b, fat, a.front());
  ASSERT_EQ(chain.clusters(), a);
  const Bytes data = random_bytes(4 * 512, 3);
  chain.write(0, data);
  EXPECT_EQ(chain.read_all(), data);
}

TEST_F(FatTest, SetLengthZeroFillsAndShrinks)
{
  const BootSector b = boot();
  Fat fat(vol.device, b);
  auto junk = fat.alloc({}, 4);
  for (std::uint32_t c : junk) {
    vol.device.write_at(cluster_to_byte_offset(b, c), Bytes(512, 0xAB));
  }
  fat.free(junk, 0);
  ClusterChain chain(vol.device, b, fat, 0);
  chain.set_length(1, 4);
  EXPECT_EQ(chain.clusters().size(), 4u);
  EXPECT_EQ(chain.read_all(), Bytes(4 * 512, 0));
  const std::uint32_t free_before = fat.free_count();
  chain.set_length(513);
  EXPECT_EQ(chain.clusters().size(), 2u);
  EXPECT_EQ(fat.free_count(), free_before + 2);
  EXPECT_EQ(error_kind([&] { chain.set_length(std::uint64_t{fat.entry_count()} * 512 + 1); }),
            ErrorKind::kNoSpace);
}

}  // namespace
}  // namespace umstk::fat32
