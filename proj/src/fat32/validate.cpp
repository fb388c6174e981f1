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

#include <deque>
#include <string>

#include "umstk/fat32/dirent.hpp"
#include "umstk/fat32/format.hpp"

namespace umstk::fat32 {

namespace {

// Reads the FAT straight from the device so the check does not share code with the Fat class.
class RawFat
{
 public:
  RawFat(BlockDevice& device, const BootSector& boot, std::uint8_t copy)
      : count_(boot.fat_entry_count())
  {
    const std::uint64_t sector =
        boot.fat_region_start() + std::uint64_t{copy} * boot.fat_size_sectors;
    bytes_ = device.read_at(sector * boot.bytes_per_sector,
                            std::size_t{boot.fat_size_sectors} * boot.bytes_per_sector);
  }

  std::uint32_t operator[](std::uint32_t c) const { return load_le32(bytes_, std::size_t{c} * 4) & 0x0FFFFFFF; }
  std::uint32_t count() const { return count_; }
  const Bytes& bytes() const { return bytes_; }

 private:
  std::uint32_t count_;
  Bytes bytes_;
};

struct Walker {
  BlockDevice& device;
  const BootSector& boot;
  const RawFat& fat;
  ValidationReport& report;
  std::vector<std::string> owner;

  void problem(std::string msg) { report.problems.push_back(std::move(msg)); }

  // Follows and claims a chain; returns an empty list when it is unusable.
  std::vector<std::uint32_t> claim(std::uint32_t start, const std::string& path)
  {
    std::vector<std::uint32_t> chain;
    std::uint32_t c = start;
    while (true) {
      if (c < 2 || c >= fat.count()) {
        problem(path + ": chain reaches cluster " + std::to_string(c) + " outside the FAT");
        return {};
      }
      if (!owner[c].empty()) {
        problem(path + ": cluster " + std::to_string(c) + " already belongs to " + owner[c]);
        return {};
      }
      const std::uint32_t next = fat[c];
      if (next == 0 || next == 1 || next == 0x0FFFFFF7) {
        problem(path + ": cluster " + std::to_string(c) + " has entry " + std::to_string(next));
        return {};
      }
      owner[c] = path;
      chain.push_back(c);
      if (next >= 0x0FFFFFF8) {
        return chain;
      }
      c = next;
    }
  }

  Bytes read_chain(const std::vector<std::uint32_t>& chain)
  {
    const std::uint32_t cs = boot.cluster_size();
    Bytes out(std::size_t{cs} * chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) {
      const std::uint64_t off =
          (std::uint64_t{boot.data_region_start()} + std::uint64_t{chain[i] - 2} * boot.sectors_per_cluster) *
          boot.bytes_per_sector;
      device.read_at(off, ByteSpan{out.data() + i * cs, cs});
    }
    return out;
  }

  void walk_directory(std::uint32_t start, std::uint32_t parent_start, bool is_root,
                      const std::string& path)
  {
    const std::vector<std::uint32_t> chain = claim(start, path);
    if (chain.empty()) {
      return;
    }
    ++report.directories;
    const DirectoryListing listing = parse_directory(read_chain(chain));

    const auto& recs = listing.records;
    std::size_t dots = 0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (recs[i].kind == DirectoryRecord::Kind::kDot ||
          recs[i].kind == DirectoryRecord::Kind::kDotDot) {
        ++dots;
      }
    }
    if (is_root) {
      if (dots != 0) {
        problem("/: root directory holds dot entries");
      }
    } else {
      const bool dot_ok = recs.size() >= 2 && recs[0].kind == DirectoryRecord::Kind::kDot &&
                          recs[0].short_slot == 0 && recs[0].meta.start_cluster == start;
      const bool dotdot_ok = recs.size() >= 2 && recs[1].kind == DirectoryRecord::Kind::kDotDot &&
                             recs[1].short_slot == 1 &&
                             recs[1].meta.start_cluster == parent_start;
      if (!dot_ok || !dotdot_ok || dots != 2) {
        problem(path + ": dot/dotdot entries missing or wrong");
      }
    }

    for (const DirectoryRecord& rec : recs) {
      if (rec.kind != DirectoryRecord::Kind::kNormal) {
        continue;
      }
      const EntryMetadata& m = rec.meta;
      const std::string child = (is_root ? "/" : path + "/") + m.name();
      if (m.is_directory()) {
        if (m.file_size != 0) {
          problem(child + ": directory with non-zero size");
        }
        if (m.start_cluster == 0) {
          problem(child + ": directory without clusters");
          continue;
        }
        walk_directory(m.start_cluster, is_root ? 0 : start, false, child);
        continue;
      }
      ++report.files;
      const std::uint64_t cs = boot.cluster_size();
      const std::uint64_t expected = (std::uint64_t{m.file_size} + cs - 1) / cs;
      std::size_t length = 0;
      if (m.start_cluster != 0) {
        length = claim(m.start_cluster, child).size();
      }
      if (length != expected) {
        problem(child + ": size " + std::to_string(m.file_size) + " needs " +
                std::to_string(expected) + " clusters, chain has " + std::to_string(length));
      }
    }
  }
};

}  // namespace

ValidationReport validate_volume(BlockDevice& device)
{
  ValidationReport report;
  const BootSector boot = parse_boot_sector(device.read_at(0, 512));
  const std::uint8_t active = boot.mirroring() ? 0 : boot.active_fat();
  const RawFat fat(device, boot, active);

  if (boot.mirroring()) {
    for (std::uint8_t i = 1; i < boot.num_fats; ++i) {
      if (RawFat(device, boot, i).bytes() != fat.bytes()) {
        report.problems.push_back("FAT copy " + std::to_string(i) + " differs from copy 0");
      }
    }
  }

  std::uint32_t free = 0;
  for (std::uint32_t c = 2; c < fat.count(); ++c) {
    free += fat[c] == 0 ? 1 : 0;
  }
  const Bytes fs = device.read_at(std::uint64_t{boot.fsinfo_sector} * boot.bytes_per_sector, 512);
  const FsInfo info = parse_fsinfo(fs);
  if (!info.signatures_valid) {
    report.problems.push_back("FSInfo signatures invalid");
  } else if (info.free_count != kUnknown && info.free_count != free) {
    report.problems.push_back("FSInfo free count " + std::to_string(info.free_count) +
                              " but FAT has " + std::to_string(free) + " free entries");
  }

  Walker w{device, boot, fat, report, std::vector<std::string>(fat.count())};
  w.walk_directory(boot.root_cluster, 0, true, "/");

  for (std::uint32_t c = 2; c < fat.count(); ++c) {
    if (!w.owner[c].empty()) {
      ++report.used_clusters;
    } else if (fat[c] != 0 && fat[c] != 0x0FFFFFF7) {
      report.problems.push_back("lost cluster " + std::to_string(c));
    }
  }
  return report;
}

}  // namespace umstk::fat32
