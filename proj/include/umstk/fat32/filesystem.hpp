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
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "umstk/blockdev.hpp"
#include "umstk/fat32/dirent.hpp"
#include "umstk/fat32/fat.hpp"
#include "umstk/fat32/layout.hpp"

namespace umstk::fat32 {

using Clock = std::function<Timestamp()>;

// Local wall-clock time clamped to the representable range.
Timestamp system_clock_now();

enum class NodeKind { kFile, kDirectory };

// Handle to a file or directory. Positions refer to the parent directory's slots, so a handle
// stays valid until the node is deleted or moved.
struct FatNode {
  EntryMetadata meta;
  bool is_root = false;
  std::uint32_t parent_cluster = 0;
  std::uint32_t first_slot = 0;
  std::uint32_t short_slot = 0;

  bool is_directory() const { return is_root || meta.is_directory(); }
  std::string name() const { return is_root ? std::string("/") : meta.name(); }
  std::uint32_t size() const { return meta.file_size; }
  std::uint32_t start_cluster() const { return meta.start_cluster; }
};

struct MountOptions {
  Clock clock;
  // Off for read-only media: reads then leave the last-access date alone.
  bool update_access_date = true;
};

class FatFileSystem
{
 public:
  explicit FatFileSystem(BlockDevice& device, MountOptions options = {});
  ~FatFileSystem();

  FatFileSystem(const FatFileSystem&) = delete;
  FatFileSystem& operator=(const FatFileSystem&) = delete;

  const BootSector& boot() const { return boot_; }
  Fat& fat() { return *fat_; }

  FatNode root() const;
  // Live entries, without dot, dotdot and the volume label.
  std::vector<FatNode> list_children(const FatNode& dir);
  std::optional<FatNode> find_child(const FatNode& dir, std::string_view name);
  // Slash separated path from the root. Throws Error(kNotFound / kNotADirectory).
  FatNode lookup(std::string_view path);

  FatNode create_child(const FatNode& dir, std::string_view name, NodeKind kind);
  void delete_node(const FatNode& node);
  FatNode move_node(const FatNode& node, const FatNode& new_parent,
                    std::optional<std::string_view> new_name = std::nullopt);

  // Range must lie within the file size; throws Error(kRange) otherwise.
  void read(FatNode& file, std::uint64_t offset, ByteSpan out);
  Bytes read_all(FatNode& file);
  void write(FatNode& file, std::uint64_t offset, ConstByteSpan data);
  // Truncates or zero-extends.
  void set_size(FatNode& file, std::uint64_t size);

  std::string volume_label();
  void set_volume_label(std::string_view label);

  std::uint32_t free_clusters() const { return fat_->free_count(); }
  std::uint64_t free_bytes() const
  {
    return std::uint64_t{fat_->free_count()} * boot_.cluster_size();
  }
  std::uint64_t total_bytes() const
  {
    return std::uint64_t{boot_.cluster_count()} * boot_.cluster_size();
  }

  void flush();

 private:
  struct LoadedDir;

  LoadedDir load_dir(std::uint32_t cluster);
  std::uint32_t dir_cluster(const FatNode& dir) const;
  FatNode make_node(const DirectoryRecord& rec, std::uint32_t dir_cluster) const;
  std::vector<FatNode> children_of(LoadedDir& dir) const;
  void check_name_free(LoadedDir& dir, std::string_view name, const FatNode* ignore) const;
  FatNode insert_entry(LoadedDir& dir, EntryMetadata meta);
  void erase_slots(std::uint32_t dir_cluster, std::uint32_t first, std::uint32_t last);
  void store_entry(const FatNode& node);
  void set_dotdot(std::uint32_t dir_start, std::uint32_t parent_start);
  void require_file(const FatNode& node) const;
  Timestamp now() const;

  BlockDevice& device_;
  MountOptions options_;
  BootSector boot_;
  std::unique_ptr<Fat> fat_;
};

}  // namespace umstk::fat32
