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

#include <map>
#include <random>

#include "harness.hpp"
#include "oracles.hpp"
#include "umstk/fat32/filesystem.hpp"
#include "umstk/fat32/format.hpp"

namespace umstk::fat32 {
namespace {

using testing::error_kind;
using testing::random_bytes;

class FsTest : public ::testing::Test
{
 protected:
  FsTest() : vol(8 << 20, 1) {}

  FatFileSystem& fs() { return *vol.fs; }

  FatNode make_file(const std::string& dir, const std::string& name, const Bytes& data)
  {
    FatNode f = fs().create_child(fs().lookup(dir), name, NodeKind::kFile);
    if (!data.empty()) {
      fs().write(f, 0, data);
    }
    return f;
  }

  void expect_valid()
  {
    const ValidationReport r = validate_volume(vol.device);
    for (const std::string& p : r.problems) {
      ADD_FAILURE() << p;
    }
  }

  testing::Volume vol;
};

TEST_F(FsTest, EmptyRoot)
{
  EXPECT_TRUE(fs().list_children(fs().root()).empty());
  EXPECT_EQ(fs().volume_label(), "NO NAME");
  EXPECT_EQ(fs().free_clusters(), fs().boot().cluster_count() - 1);
  EXPECT_EQ(fs().total_bytes(), std::uint64_t{fs().boot().cluster_count()} * 512);
  expect_valid();
}

TEST_F(FsTest, CreateAndLookup)
{
  make_file("/", "Hello World.txt", {});
  FatNode docs = fs().create_child(fs().root(), "docs", NodeKind::kDirectory);
  make_file("/docs", "inner.bin", Bytes{1, 2, 3});

  EXPECT_EQ(fs().lookup("/hello world.TXT").name(), "Hello World.txt");
  EXPECT_EQ(fs().lookup("HELLOW~1.TXT").name(), "Hello World.txt");
  EXPECT_EQ(fs().lookup("/docs/inner.bin").size(), 3u);
  EXPECT_EQ(fs().lookup("docs//./inner.bin").size(), 3u);
  EXPECT_TRUE(fs().lookup("/docs").is_directory());
  EXPECT_TRUE(fs().lookup("/").is_root);
  EXPECT_EQ(error_kind([&] { fs().lookup("/nope"); }), ErrorKind::kNotFound);
  EXPECT_EQ(error_kind([&] { fs().lookup("/docs/inner.bin/x"); }), ErrorKind::kNotADirectory);
  EXPECT_EQ(fs().list_children(docs).size(), 1u);
  expect_valid();
}

TEST_F(FsTest, NameCollisionsAreCaseInsensitive)
{
  make_file("/", "Report.doc", {});
  EXPECT_EQ(error_kind([&] { make_file("/", "REPORT.DOC", {}); }), ErrorKind::kExists);
  EXPECT_EQ(error_kind([&] { fs().create_child(fs().root(), "report.doc", NodeKind::kDirectory); }),
            ErrorKind::kExists);
  EXPECT_EQ(error_kind([&] { make_file("/", "bad:name", {}); }), ErrorKind::kInvalidName);
  EXPECT_EQ(fs().list_children(fs().root()).size(), 1u);
}

TEST_F(FsTest, ShortAliasesStayUnique)
{
  for (int i = 0; i < 12; ++i) {
    make_file("/", "Quarterly Report " + std::to_string(i) + ".txt", {});
  }
  std::set<ShortName> seen;
  for (const FatNode& n : fs().list_children(fs().root())) {
    EXPECT_TRUE(seen.insert(n.meta.short_name).second) << n.name();
  }
  EXPECT_EQ(fs().lookup("QUARTE~1.TXT").name(), "Quarterly Report 0.txt");
  EXPECT_EQ(fs().lookup("QUART~10.TXT").name(), "Quarterly Report 9.txt");
}

TEST_F(FsTest, WriteReadPersistsAcrossRemount)
{
  const Bytes data = random_bytes(70000, 9);
  make_file("/", "blob.bin", data);
  vol.remount();
  FatNode f = fs().lookup("/blob.bin");
  EXPECT_EQ(f.size(), 70000u);
  EXPECT_EQ(fs().read_all(f), data);
  Bytes middle(1000);
  fs().read(f, 30000, middle);
  EXPECT_EQ(middle, Bytes(data.begin() + 30000, data.begin() + 31000));
  expect_valid();
}

TEST_F(FsTest, ReadBeyondSizeFails)
{
  FatNode f = make_file("/", "small", Bytes(10, 7));
  Bytes buf(11);
  EXPECT_EQ(error_kind([&] { fs().read(f, 0, buf); }), ErrorKind::kRange);
  Bytes one(1);
  EXPECT_EQ(error_kind([&] { fs().read(f, 10, one); }), ErrorKind::kRange);
  Bytes none;
  EXPECT_NO_THROW(fs().read(f, 10, none));
}

TEST_F(FsTest, DirectoriesRejectFileOperations)
{
  FatNode d = fs().create_child(fs().root(), "dir", NodeKind::kDirectory);
  Bytes buf(1);
  EXPECT_EQ(error_kind([&] { fs().write(d, 0, buf); }), ErrorKind::kIsADirectory);
  EXPECT_EQ(error_kind([&] { fs().read(d, 0, buf); }), ErrorKind::kIsADirectory);
  EXPECT_EQ(error_kind([&] { fs().set_size(d, 5); }), ErrorKind::kIsADirectory);
  FatNode f = make_file("/", "f", {});
  EXPECT_EQ(error_kind([&] { fs().create_child(f, "x", NodeKind::kFile); }),
            ErrorKind::kNotADirectory);
}

TEST_F(FsTest, SparseWriteZeroFills)
{
  FatNode f = make_file("/", "sparse", {});
  fs().write(f, 2000, Bytes{9, 9});
  EXPECT_EQ(f.size(), 2002u);
  Bytes expected(2002, 0);
  expected[2000] = expected[2001] = 9;
  EXPECT_EQ(fs().read_all(f), expected);
}

TEST_F(FsTest, TruncateThenExtendReadsZeros)
{
  FatNode f = make_file("/", "t", Bytes(1500, 0xCC));
  fs().set_size(f, 100);
  EXPECT_EQ(fs().read_all(f), Bytes(100, 0xCC));
  fs().set_size(f, 1500);
  Bytes expected(1500, 0);
  std::fill_n(expected.begin(), 100, 0xCC);
  EXPECT_EQ(fs().read_all(f), expected);
  fs().set_size(f, 0);
  EXPECT_EQ(f.start_cluster(), 0u);
  expect_valid();
}

TEST_F(FsTest, FileTooLarge)
{
  FatNode f = make_file("/", "huge", {});
  EXPECT_EQ(error_kind([&] { fs().set_size(f, 0x100000000ull); }), ErrorKind::kFileTooLarge);
  EXPECT_EQ(error_kind([&] { fs().write(f, 0xFFFFFFFFull, Bytes{1}); }), ErrorKind::kFileTooLarge);
}

TEST_F(FsTest, DeleteReleasesClusters)
{
  const std::uint32_t before = fs().free_clusters();
  make_file("/", "a", random_bytes(5000, 1));
  EXPECT_EQ(fs().free_clusters(), before - 10);
  fs().delete_node(fs().lookup("/a"));
  EXPECT_EQ(fs().free_clusters(), before);
  EXPECT_EQ(error_kind([&] { fs().lookup("/a"); }), ErrorKind::kNotFound);
  EXPECT_EQ(oracle::scan_fat(vol.device.bytes()).fsinfo_free, before);
  expect_valid();
}

TEST_F(FsTest, DeleteRules)
{
  FatNode d = fs().create_child(fs().root(), "d", NodeKind::kDirectory);
  make_file("/d", "child", {});
  EXPECT_EQ(error_kind([&] { fs().delete_node(d); }), ErrorKind::kNotEmpty);
  EXPECT_EQ(error_kind([&] { fs().delete_node(fs().root()); }), ErrorKind::kInvalidArgument);
  fs().delete_node(fs().lookup("/d/child"));
  fs().delete_node(fs().lookup("/d"));
  EXPECT_TRUE(fs().list_children(fs().root()).empty());
  expect_valid();
}

TEST_F(FsTest, DeletedSlotsAreReused)
{
  make_file("/", "first file name.txt", {});
  make_file("/", "keep", {});
  const FatNode gone = fs().lookup("/first file name.txt");
  fs().delete_node(gone);
  const FatNode reused = make_file("/", "x", {});
  EXPECT_EQ(reused.first_slot, gone.first_slot);
  EXPECT_EQ(fs().list_children(fs().root()).size(), 2u);
  expect_valid();
}

TEST_F(FsTest, RenameAndMove)
{
  FatNode a = fs().create_child(fs().root(), "a", NodeKind::kDirectory);
  FatNode b = fs().create_child(fs().root(), "b", NodeKind::kDirectory);
  const Bytes data = random_bytes(3000, 4);
  make_file("/a", "file.txt", data);

  FatNode moved = fs().move_node(fs().lookup("/a/file.txt"), b, "renamed.txt");
  EXPECT_EQ(moved.name(), "renamed.txt");
  EXPECT_EQ(fs().read_all(moved), data);
  EXPECT_TRUE(fs().list_children(a).empty());

  fs().move_node(fs().lookup("/b"), fs().lookup("/a"));
  FatNode deep = fs().lookup("/a/b/renamed.txt");
  EXPECT_EQ(fs().read_all(deep), data);
  expect_valid();
  vol.remount();
  expect_valid();
}

TEST_F(FsTest, MoveIntoOwnSubtreeRejected)
{
  FatNode a = fs().create_child(fs().root(), "a", NodeKind::kDirectory);
  fs().create_child(a, "b", NodeKind::kDirectory);
  FatNode c = fs().create_child(fs().lookup("/a/b"), "c", NodeKind::kDirectory);
  EXPECT_EQ(error_kind([&] { fs().move_node(a, c); }), ErrorKind::kCycle);
  EXPECT_EQ(error_kind([&] { fs().move_node(a, a); }), ErrorKind::kCycle);
  EXPECT_EQ(error_kind([&] { fs().move_node(fs().root(), c); }), ErrorKind::kInvalidArgument);
  make_file("/", "taken", {});
  EXPECT_EQ(error_kind([&] { fs().move_node(c, fs().root(), "TAKEN"); }), ErrorKind::kExists);
  expect_valid();
}

TEST_F(FsTest, RenameInPlaceToDifferentCase)
{
  FatNode f = make_file("/", "readme", Bytes{1});
  FatNode g = fs().move_node(f, fs().root(), "README");
  EXPECT_EQ(g.name(), "README");
  EXPECT_EQ(fs().list_children(fs().root()).size(), 1u);
}

TEST_F(FsTest, DirectoryGrowsPastOneCluster)
{
  FatNode d = fs().create_child(fs().root(), "many", NodeKind::kDirectory);
  for (int i = 0; i < 60; ++i) {
    make_file("/many", "entry number " + std::to_string(i), {});
  }
  ClusterChain chain(vol.device, fs().boot(), fs().fat(), d.start_cluster());
  EXPECT_GT(chain.clusters().size(), 1u);
  vol.remount();
  EXPECT_EQ(fs().list_children(fs().lookup("/many")).size(), 60u);
  expect_valid();
}

TEST_F(FsTest, DirectorySlotLimit)
{
  // Fill the root directory to 65536 slots with raw short entries.
  ClusterChain chain(vol.device, fs().boot(), fs().fat(), fs().boot().root_cluster);
  chain.set_length(65536 * 32);
  Bytes raw(65536 * 32);
  for (std::size_t s = 0; s < 65536; ++s) {
    EntryMetadata m;
    m.short_name = make_short_name("F" + std::to_string(s));
    m.attributes = attr::kArchive;
    const auto e = encode_short_entry(m);
    std::copy(e.begin(), e.end(), raw.begin() + s * 32);
  }
  chain.write(0, raw);
  fs().flush();
  vol.remount();
  EXPECT_EQ(error_kind([&] { make_file("/", "one more", {}); }), ErrorKind::kNoSpace);
}

TEST_F(FsTest, VolumeFullLeavesConsistentState)
{
  FatNode f = make_file("/", "filler", {});
  const std::uint64_t room = fs().free_bytes();
  EXPECT_EQ(error_kind([&] { fs().write(f, 0, Bytes(room + 512, 1)); }), ErrorKind::kNoSpace);
  EXPECT_EQ(fs().lookup("/filler").size(), 0u);
  fs().write(f, 0, Bytes(room, 1));
  EXPECT_EQ(fs().free_clusters(), 0u);
  EXPECT_EQ(error_kind([&] { fs().create_child(fs().root(), "dir", NodeKind::kDirectory); }),
            ErrorKind::kNoSpace);
  expect_valid();
}

TEST_F(FsTest, VolumeLabel)
{
  fs().set_volume_label("backup");
  EXPECT_EQ(fs().volume_label(), "BACKUP");
  EXPECT_EQ(std::string(vol.device.bytes().begin() + 71, vol.device.bytes().begin() + 82),
            "BACKUP     ");
  EXPECT_EQ(std::string(vol.device.bytes().begin() + 6 * 512 + 71,
                        vol.device.bytes().begin() + 6 * 512 + 82),
            "BACKUP     ");
  EXPECT_TRUE(fs().list_children(fs().root()).empty());
  fs().set_volume_label("second");
  vol.remount();
  EXPECT_EQ(fs().volume_label(), "SECOND");
  EXPECT_EQ(error_kind([&] { fs().set_volume_label("way too long label"); }),
            ErrorKind::kInvalidName);
  expect_valid();
}

TEST_F(FsTest, TimestampsFollowClock)
{
  Timestamp clock_value{2024, 5, 17, 13, 45, 31, 42};
  vol.fs.reset();
  vol.fs = std::make_unique<FatFileSystem>(vol.device,
                                           MountOptions{[&] { return clock_value; }, true});
  FatNode f = make_file("/", "stamp", {});
  EXPECT_EQ(f.meta.created, clock_value);
  EXPECT_EQ(f.meta.written, (Timestamp{2024, 5, 17, 13, 45, 30, 0}));
  EXPECT_EQ(f.meta.accessed, (Timestamp{2024, 5, 17}));

  clock_value = {2025, 1, 2, 3, 4, 6, 0};
  fs().write(f, 0, Bytes{1});
  Bytes one(1);
  fs().read(f, 0, one);
  const FatNode again = fs().lookup("/stamp");
  EXPECT_EQ(again.meta.written, clock_value);
  EXPECT_EQ(again.meta.accessed, (Timestamp{2025, 1, 2}));
  EXPECT_EQ(again.meta.created, (Timestamp{2024, 5, 17, 13, 45, 31, 42}));
}

TEST_F(FsTest, ReadOnlyMountLeavesAccessDate)
{
  make_file("/", "ro", Bytes{5});
  vol.fs.reset();
  vol.fs = std::make_unique<FatFileSystem>(
      vol.device, MountOptions{[] { return Timestamp{2030, 1, 1}; }, false});
  FatNode f = fs().lookup("/ro");
  const Bytes before = vol.device.bytes();
  fs().read_all(f);
  EXPECT_EQ(vol.device.bytes(), before);
}

TEST_F(FsTest, StaleFsInfoCorrectedOnFlush)
{
  Bytes fs_sector = vol.device.read_at(512, 512);
  patch_fsinfo(fs_sector, FsInfo{1, kUnknown, true});
  vol.device.write_at(512, fs_sector);
  vol.remount();
  EXPECT_EQ(fs().free_clusters(), fs().boot().cluster_count() - 1);
  EXPECT_FALSE(validate_volume(vol.device).ok());
  fs().flush();
  expect_valid();
}

TEST_F(FsTest, MountRejectsNonFat)
{
  MemoryDevice blank(4096);
  EXPECT_EQ(error_kind([&] { FatFileSystem x(blank); }), ErrorKind::kNotFat32);
}

// Random operations checked against an in-memory model after every step and a remount.
TEST_F(FsTest, RandomOperationsMatchModel)
{
  std::mt19937 rng(2024);
  std::map<std::string, Bytes> model;
  std::vector<std::string> dirs{"/"};
  for (int step = 0; step < 300; ++step) {
    const int op = static_cast<int>(rng() % 6);
    if (op == 0 || model.empty()) {
      const std::string dir = dirs[rng() % dirs.size()];
      const std::string name = "file " + std::to_string(step) + ".dat";
      const std::string path = (dir == "/" ? "/" : dir + "/") + name;
      const Bytes data = random_bytes(rng() % 4000, step);
      make_file(dir, name, data);
      model[path] = data;
    } else if (op == 1 && dirs.size() < 8) {
      const std::string parent = dirs[rng() % dirs.size()];
      const std::string name = "dir" + std::to_string(step);
      fs().create_child(fs().lookup(parent), name, NodeKind::kDirectory);
      dirs.push_back((parent == "/" ? "/" : parent + "/") + name);
    } else {
      auto it = model.begin();
      std::advance(it, static_cast<std::ptrdiff_t>(rng() % model.size()));
      FatNode f = fs().lookup(it->first);
      Bytes& want = it->second;
      if (op == 2) {
        const std::size_t off = rng() % (want.size() + 600);
        const Bytes patch = random_bytes(1 + rng() % 1500, step + 1000);
        fs().write(f, off, patch);
        if (want.size() < off + patch.size()) want.resize(off + patch.size(), 0);
        std::copy(patch.begin(), patch.end(), want.begin() + static_cast<std::ptrdiff_t>(off));
      } else if (op == 3) {
        const std::size_t size = rng() % 5000;
        fs().set_size(f, size);
        want.resize(size, 0);
      } else if (op == 4) {
        fs().delete_node(f);
        model.erase(it);
      } else {
        const std::string dir = dirs[rng() % dirs.size()];
        const std::string name = "moved " + std::to_string(step);
        const std::string path = (dir == "/" ? "/" : dir + "/") + name;
        fs().move_node(f, fs().lookup(dir), name);
        Bytes keep = std::move(want);
        model.erase(it);
        model[path] = std::move(keep);
      }
    }
    if (step % 25 == 24) {
      vol.remount();
    }
    for (auto& [path, want] : model) {
      FatNode f = fs().lookup(path);
      ASSERT_EQ(fs().read_all(f), want) << "step " << step << " " << path;
    }
    const ValidationReport r = validate_volume(vol.device);
    ASSERT_TRUE(r.ok()) << "step " << step << ": " << r.problems.front();
    ASSERT_EQ(r.files, model.size());
    ASSERT_EQ(r.directories, dirs.size());
  }
}

}  // namespace
}  // namespace umstk::fat32
