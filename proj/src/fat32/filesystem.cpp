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

#include "umstk/fat32/filesystem.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <set>

#include "umstk/error.hpp"
#include "umstk/log.hpp"
#include "umstk/utf.hpp"

namespace umstk::fat32 {

namespace {

constexpr std::uint32_t kMaxDirSlots = 65536;

[[noreturn]] void fail(ErrorKind kind, const std::string& msg)
{
  throw Error(Layer::kFat32, kind, msg);
}

bool slot_free(const Bytes& bytes, const DirectoryListing& listing, std::uint32_t slot)
{
  if (listing.terminator_slot && slot >= *listing.terminator_slot) {
    return true;
  }
  return bytes[std::size_t{slot} * kDirEntrySize] == kDeletedMarker;
}

std::vector<std::string_view> split_path(std::string_view path)
{
  std::vector<std::string_view> parts;
  while (!path.empty()) {
    const std::size_t slash = path.find('/');
    const std::string_view part = path.substr(0, slash);
    if (!part.empty() && part != ".") {
      parts.push_back(part);
    }
    if (slash == std::string_view::npos) {
      break;
    }
    path.remove_prefix(slash + 1);
  }
  return parts;
}

}  // namespace

Timestamp system_clock_now()
{
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  localtime_r(&tt, &tm);
  Timestamp t;
  t.year = std::clamp(tm.tm_year + 1900, 1980, 2107);
  t.month = tm.tm_mon + 1;
  t.day = tm.tm_mday;
  t.hour = tm.tm_hour;
  t.minute = tm.tm_min;
  t.second = std::min(tm.tm_sec, 59);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  t.centisecond = static_cast<int>(ms / 10);
  return t;
}

struct FatFileSystem::LoadedDir {
  std::uint32_t cluster;
  ClusterChain chain;
  Bytes bytes;
  DirectoryListing listing;
};

FatFileSystem::FatFileSystem(BlockDevice& device, MountOptions options)
    : device_(device), options_(std::move(options))
{
  if (device_.size_bytes() < 512) {
    fail(ErrorKind::kNotFat32, "device smaller than one sector");
  }
  boot_ = parse_boot_sector(device_.read_at(0, 512));
  const std::uint64_t claimed = std::uint64_t{boot_.total_sectors} * boot_.bytes_per_sector;
  if (claimed != device_.size_bytes()) {
    log().warn("fat32: boot sector claims {} bytes, container holds {}", claimed,
               device_.size_bytes());
  }
  fat_ = std::make_unique<Fat>(device_, boot_);
  if (fat_->get(boot_.root_cluster) == kFree) {
    fail(ErrorKind::kCorruptChain, "root directory cluster is marked free");
  }
}

FatFileSystem::~FatFileSystem() = default;

Timestamp FatFileSystem::now() const
{
  return options_.clock ? options_.clock() : system_clock_now();
}

void FatFileSystem::flush()
{
  fat_->flush();
  device_.flush();
}

FatNode FatFileSystem::root() const
{
  FatNode n;
  n.is_root = true;
  n.meta.attributes = attr::kDirectory;
  n.meta.start_cluster = boot_.root_cluster;
  n.meta.short_name = make_short_name("/");
  return n;
}

std::uint32_t FatFileSystem::dir_cluster(const FatNode& dir) const
{
  if (dir.is_root) {
    return boot_.root_cluster;
  }
  if (!dir.meta.is_directory()) {
    fail(ErrorKind::kNotADirectory, "\"" + dir.name() + "\" is not a directory");
  }
  return dir.meta.start_cluster == 0 ? boot_.root_cluster : dir.meta.start_cluster;
}

FatFileSystem::LoadedDir FatFileSystem::load_dir(std::uint32_t cluster)
{
  LoadedDir d{cluster, ClusterChain(device_, boot_, *fat_, cluster), {}, {}};
  d.bytes = d.chain.read_all();
  d.listing = parse_directory(d.bytes);
  return d;
}

FatNode FatFileSystem::make_node(const DirectoryRecord& rec, std::uint32_t cluster) const
{
  FatNode n;
  n.meta = rec.meta;
  n.parent_cluster = cluster;
  n.first_slot = rec.first_slot;
  n.short_slot = rec.short_slot;
  return n;
}

std::vector<FatNode> FatFileSystem::children_of(LoadedDir& dir) const
{
  std::vector<FatNode> out;
  for (const DirectoryRecord& rec : dir.listing.records) {
    if (rec.kind == DirectoryRecord::Kind::kNormal) {
      out.push_back(make_node(rec, dir.cluster));
    }
  }
  return out;
}

std::vector<FatNode> FatFileSystem::list_children(const FatNode& dir)
{
  LoadedDir d = load_dir(dir_cluster(dir));
  return children_of(d);
}

std::optional<FatNode> FatFileSystem::find_child(const FatNode& dir, std::string_view name)
{
  const std::string key = fold_case(name);
  for (FatNode& child : list_children(dir)) {
    if (fold_case(child.meta.long_name) == key ||
        fold_case(short_name_display(child.meta.short_name)) == key) {
      return child;
    }
  }
  return std::nullopt;
}

FatNode FatFileSystem::lookup(std::string_view path)
{
  FatNode node = root();
  for (std::string_view part : split_path(path)) {
    if (!node.is_directory()) {
      fail(ErrorKind::kNotADirectory, "\"" + node.name() + "\" is not a directory");
    }
    std::optional<FatNode> child = find_child(node, part);
    if (!child) {
      fail(ErrorKind::kNotFound, "no such file or directory: " + std::string(path));
    }
    node = std::move(*child);
  }
  return node;
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

void FatFileSystem::check_name_free(LoadedDir& dir, std::string_view name,
                                    const FatNode* ignore) const
{
  const std::string key = fold_case(name);
  for (const FatNode& child : children_of(dir)) {
    if (ignore != nullptr && child.parent_cluster == ignore->parent_cluster &&
        child.short_slot == ignore->short_slot) {
      continue;
    }
    if (fold_case(child.meta.long_name) == key ||
        fold_case(short_name_display(child.meta.short_name)) == key) {
      fail(ErrorKind::kExists, "\"" + std::string(name) + "\" already exists");
    }
  }
}

FatNode FatFileSystem::insert_entry(LoadedDir& dir, EntryMetadata meta)
{
  std::set<ShortName> taken;
  for (const DirectoryRecord& rec : dir.listing.records) {
    taken.insert(rec.meta.short_name);
  }
  meta.short_name = generate_short_name(meta.long_name, taken);
  const Bytes encoded = serialize_directory_entry(meta);
  const auto needed = static_cast<std::uint32_t>(encoded.size() / kDirEntrySize);

  // First fit over deleted and post-terminator slots.
  std::uint32_t start = 0;
  std::uint32_t run = 0;
  std::uint32_t slot = 0;
  for (; slot < dir.listing.slot_count && run < needed; ++slot) {
    if (slot_free(dir.bytes, dir.listing, slot)) {
      if (run == 0) {
        start = slot;
      }
      ++run;
    } else {
      run = 0;
    }
  }
  if (run < needed) {
    if (run == 0) {
      start = dir.listing.slot_count;
    }
    const std::uint64_t slots_needed = std::uint64_t{start} + needed;
    if (slots_needed > kMaxDirSlots) {
      fail(ErrorKind::kNoSpace, "directory is at its 65536 entry limit");
    }
    dir.chain.set_length(slots_needed * kDirEntrySize);
    fat_->flush();
    dir.bytes.resize(dir.chain.capacity(), 0);
    dir.listing.slot_count = static_cast<std::uint32_t>(dir.bytes.size() / kDirEntrySize);
  }

  const std::uint32_t end = start + needed;
  std::copy(encoded.begin(), encoded.end(), dir.bytes.begin() + std::size_t{start} * kDirEntrySize);
  dir.chain.write(std::uint64_t{start} * kDirEntrySize, encoded);

  // Appending past the old terminator needs a new one right after the run.
  const bool past_terminator = dir.listing.terminator_slot && end > *dir.listing.terminator_slot;
  if (past_terminator && end < dir.listing.slot_count) {
    dir.bytes[std::size_t{end} * kDirEntrySize] = 0x00;
    const std::uint8_t zero = 0;
    dir.chain.write(std::uint64_t{end} * kDirEntrySize, ConstByteSpan{&zero, 1});
  }
  dir.listing = parse_directory(dir.bytes);

  FatNode node;
  node.meta = decode_short_entry(
      ConstByteSpan{dir.bytes}.subspan(std::size_t{end - 1} * kDirEntrySize, kDirEntrySize));
  node.meta.long_name = meta.long_name;
  node.parent_cluster = dir.cluster;
  node.first_slot = start;
  node.short_slot = end - 1;
  return node;
}

FatNode FatFileSystem::create_child(const FatNode& parent, std::string_view name, NodeKind kind)
{
  validate_long_name(name);
  LoadedDir dir = load_dir(dir_cluster(parent));
  check_name_free(dir, name, nullptr);

  const Timestamp t = now();
  EntryMetadata meta;
  meta.long_name = std::string(name);
  meta.created = t;
  meta.accessed = date_only(t);
  meta.written = truncate_to_two_seconds(t);

  if (kind == NodeKind::kFile) {
    meta.attributes = attr::kArchive;
    FatNode node = insert_entry(dir, std::move(meta));
    fat_->flush();
    return node;
  }

  meta.attributes = attr::kDirectory;
  ClusterChain body(device_, boot_, *fat_, 0);
  body.set_length(0, 1);
  meta.start_cluster = body.start_cluster();

  EntryMetadata dot;
  dot.short_name = make_short_name(".");
  dot.attributes = attr::kDirectory;
  dot.start_cluster = meta.start_cluster;
  dot.created = meta.created;
  dot.accessed = meta.accessed;
  dot.written = meta.written;
  EntryMetadata dotdot = dot;
  dotdot.short_name = make_short_name("..");
  dotdot.start_cluster = parent.is_root ? 0 : dir.cluster;
  Bytes header = serialize_directory_entry(dot);
  const Bytes second = serialize_directory_entry(dotdot);
  header.insert(header.end(), second.begin(), second.end());
  body.write(0, header);

  try {
    FatNode node = insert_entry(dir, std::move(meta));
    fat_->flush();
    return node;
  } catch (...) {
    fat_->free(body.clusters(), 0);
    fat_->flush();
    throw;
  }
}

void FatFileSystem::erase_slots(std::uint32_t cluster, std::uint32_t first, std::uint32_t last)
{
  ClusterChain chain(device_, boot_, *fat_, cluster);
  for (std::uint32_t s = first; s <= last; ++s) {
    chain.write(std::uint64_t{s} * kDirEntrySize, ConstByteSpan{&kDeletedMarker, 1});
  }
}

void FatFileSystem::store_entry(const FatNode& node)
{
  if (node.is_root) {
    return;
  }
  ClusterChain chain(device_, boot_, *fat_, node.parent_cluster);
  const auto raw = encode_short_entry(node.meta);
  chain.write(std::uint64_t{node.short_slot} * kDirEntrySize, raw);
}

void FatFileSystem::delete_node(const FatNode& node)
{
  if (node.is_root) {
    fail(ErrorKind::kInvalidArgument, "the root directory cannot be deleted");
  }
  if (node.is_directory()) {
    if (!list_children(node).empty()) {
      fail(ErrorKind::kNotEmpty, "directory \"" + node.name() + "\" is not empty");
    }
  }
  std::vector<std::uint32_t> clusters;
  if (node.meta.start_cluster != 0) {
    clusters = fat_->get_chain(node.meta.start_cluster);
  }
  erase_slots(node.parent_cluster, node.first_slot, node.short_slot);
  fat_->free(std::move(clusters), 0);
  fat_->flush();
}

void FatFileSystem::set_dotdot(std::uint32_t dir_start, std::uint32_t parent_start)
{
  LoadedDir d = load_dir(dir_start);
  for (const DirectoryRecord& rec : d.listing.records) {
    if (rec.kind == DirectoryRecord::Kind::kDotDot) {
      EntryMetadata meta = rec.meta;
      meta.start_cluster = parent_start;
      d.chain.write(std::uint64_t{rec.short_slot} * kDirEntrySize, encode_short_entry(meta));
      return;
    }
  }
  log().warn("fat32: directory at cluster {} has no dotdot entry", dir_start);
}

FatNode FatFileSystem::move_node(const FatNode& node, const FatNode& new_parent,
                                 std::optional<std::string_view> new_name)
{
  if (node.is_root) {
    fail(ErrorKind::kInvalidArgument, "the root directory cannot be moved");
  }
  const std::string name = new_name ? std::string(*new_name) : node.name();
  validate_long_name(name);
  const std::uint32_t target = dir_cluster(new_parent);

  if (node.is_directory()) {
    // Walk from the destination up to the root through dotdot entries.
    std::uint32_t c = target;
    for (std::uint32_t guard = 0; c != boot_.root_cluster; ++guard) {
      if (c == node.meta.start_cluster) {
        fail(ErrorKind::kCycle, "cannot move \"" + node.name() + "\" into itself");
      }
      if (guard > fat_->entry_count()) {
        fail(ErrorKind::kCorruptChain, "dotdot entries form a loop");
      }
      std::optional<std::uint32_t> up;
      for (const DirectoryRecord& rec : load_dir(c).listing.records) {
        if (rec.kind == DirectoryRecord::Kind::kDotDot) {
          up = rec.meta.start_cluster;
        }
      }
      if (!up) {
        fail(ErrorKind::kCorruptChain, "directory at cluster " + std::to_string(c) + " lacks dotdot");
      }
      c = *up == 0 ? boot_.root_cluster : *up;
    }
  }

  LoadedDir dir = load_dir(target);
  check_name_free(dir, name, &node);

  EntryMetadata meta = node.meta;
  meta.long_name = name;
  meta.nt_reserved = 0;
  meta.written = truncate_to_two_seconds(now());
  FatNode moved = insert_entry(dir, std::move(meta));
  erase_slots(node.parent_cluster, node.first_slot, node.short_slot);
  if (node.is_directory() && node.parent_cluster != target) {
    set_dotdot(node.meta.start_cluster, new_parent.is_root ? 0 : target);
  }
  fat_->flush();
  return moved;
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

void FatFileSystem::require_file(const FatNode& node) const
{
  if (node.is_directory()) {
    fail(ErrorKind::kIsADirectory, "\"" + node.name() + "\" is a directory");
  }
}

void FatFileSystem::read(FatNode& file, std::uint64_t offset, ByteSpan out)
{
  require_file(file);
  if (offset > file.meta.file_size || out.size() > file.meta.file_size - offset ||
      (offset == file.meta.file_size && !out.empty())) {
    fail(ErrorKind::kRange, "read of " + std::to_string(out.size()) + " bytes at " +
                                std::to_string(offset) + " beyond size " +
                                std::to_string(file.meta.file_size));
  }
  if (!out.empty()) {
    ClusterChain chain(device_, boot_, *fat_, file.meta.start_cluster);
    chain.read(offset, out);
  }
  if (options_.update_access_date) {
    const Timestamp today = date_only(now());
    if (today != file.meta.accessed) {
      file.meta.accessed = today;
      store_entry(file);
    }
  }
}

Bytes FatFileSystem::read_all(FatNode& file)
{
  Bytes out(file.size());
  read(file, 0, out);
  return out;
}

void FatFileSystem::set_size(FatNode& file, std::uint64_t size)
{
  require_file(file);
  if (size > kMaxFileSize) {
    fail(ErrorKind::kFileTooLarge, "size " + std::to_string(size) + " exceeds 4 GiB - 1");
  }
  ClusterChain chain(device_, boot_, *fat_, file.meta.start_cluster);
  const std::uint64_t old_size = file.meta.file_size;
  if (size > old_size) {
    // Stale bytes between the old end and the end of its cluster.
    const std::uint64_t slack_end = std::min(size, chain.capacity());
    if (slack_end > old_size) {
      const Bytes zeros(static_cast<std::size_t>(slack_end - old_size), 0);
      chain.write(old_size, zeros);
    }
  }
  chain.set_length(size);
  file.meta.file_size = static_cast<std::uint32_t>(size);
  file.meta.start_cluster = chain.start_cluster();
  file.meta.attributes |= attr::kArchive;
  file.meta.written = truncate_to_two_seconds(now());
  store_entry(file);
  fat_->flush();
}

void FatFileSystem::write(FatNode& file, std::uint64_t offset, ConstByteSpan data)
{
  require_file(file);
  const std::uint64_t end = offset + data.size();
  if (end > kMaxFileSize) {
    fail(ErrorKind::kFileTooLarge,
         "write ending at byte " + std::to_string(end) + " exceeds 4 GiB - 1");
  }
  if (end > file.meta.file_size) {
    set_size(file, end);
  }
  ClusterChain chain(device_, boot_, *fat_, file.meta.start_cluster);
  chain.write(offset, data);
  file.meta.attributes |= attr::kArchive;
  file.meta.written = truncate_to_two_seconds(now());
  store_entry(file);
  fat_->flush();
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

std::string FatFileSystem::volume_label()
{
  LoadedDir d = load_dir(boot_.root_cluster);
  if (d.listing.volume_label) {
    return *d.listing.volume_label;
  }
  return boot_.label_text();
}

void FatFileSystem::set_volume_label(std::string_view label)
{
  const ShortName packed = make_volume_label(label);

  LoadedDir d = load_dir(boot_.root_cluster);
  const DirectoryRecord* existing = nullptr;
  for (const DirectoryRecord& rec : d.listing.records) {
    if (rec.kind == DirectoryRecord::Kind::kVolumeLabel) {
      existing = &rec;
      break;
    }
  }
  if (existing != nullptr) {
    EntryMetadata meta = existing->meta;
    meta.short_name = packed;
    meta.written = truncate_to_two_seconds(now());
    d.chain.write(std::uint64_t{existing->short_slot} * kDirEntrySize, encode_short_entry(meta));
  } else {
    const Timestamp t = now();
    EntryMetadata meta;
    meta.short_name = packed;
    meta.attributes = attr::kVolumeId;
    meta.created = t;
    meta.accessed = date_only(t);
    meta.written = truncate_to_two_seconds(t);
    const auto raw = encode_short_entry(meta);
    std::uint32_t slot = 0;
    while (slot < d.listing.slot_count && !slot_free(d.bytes, d.listing, slot)) {
      ++slot;
    }
    if (slot == d.listing.slot_count) {
      d.chain.set_length((std::uint64_t{slot} + 1) * kDirEntrySize);
    }
    d.chain.write(std::uint64_t{slot} * kDirEntrySize, raw);
    if (d.listing.terminator_slot && slot == *d.listing.terminator_slot &&
        slot + 1 < d.chain.capacity() / kDirEntrySize) {
      const std::uint8_t zero = 0;
      d.chain.write((std::uint64_t{slot} + 1) * kDirEntrySize, ConstByteSpan{&zero, 1});
    }
  }

  std::copy(packed.begin(), packed.end(), boot_.volume_label.begin());
  std::vector<std::uint64_t> sectors{0};
  if (boot_.backup_boot_sector != 0) {
    sectors.push_back(boot_.backup_boot_sector);
  }
  for (std::uint64_t s : sectors) {
    Bytes sector = device_.read_at(s * boot_.bytes_per_sector, boot_.bytes_per_sector);
    std::copy(packed.begin(), packed.end(), sector.begin() + 71);
    device_.write_at(s * boot_.bytes_per_sector, sector);
  }
  fat_->flush();
}

}  // namespace umstk::fat32
