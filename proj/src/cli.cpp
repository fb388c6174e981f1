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

#include "umstk/cli.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/fmt/fmt.h>

#include "umstk/blockdev.hpp"
#include "umstk/error.hpp"
#include "umstk/fat32/filesystem.hpp"
#include "umstk/fat32/format.hpp"
#include "umstk/host.hpp"
#include "umstk/loopback.hpp"
#include "umstk/mbr.hpp"
#include "umstk/selftest.hpp"
#include "umstk/target.hpp"
#include "umstk/volume.hpp"

namespace umstk::cli {

namespace {

using nlohmann::json;
using fat32::FatNode;
using fat32::FatFileSystem;

constexpr int kSchemaVersion = 1;
constexpr std::size_t kChunk = 1 << 20;

[[noreturn]] void user_error(ErrorKind kind, const std::string& msg)
{
  throw Error(Layer::kCli, kind, msg);
}

int exit_code(ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::kIo:
    case ErrorKind::kStall:
    case ErrorKind::kTransport:
    case ErrorKind::kTimeout:
    case ErrorKind::kFraming:
    case ErrorKind::kProtocol:
    case ErrorKind::kPhaseError:
    case ErrorKind::kCommandFailed:
    case ErrorKind::kUnsupportedDevice:
    case ErrorKind::kNotReady:
    case ErrorKind::kMalformedTable:
    case ErrorKind::kCorruptChain:
      return kIoError;
    default:
      return kUserError;
  }
}

struct GlobalFlags {
  std::size_t partition = 0;
  bool via_scsi = false;
  bool json = false;
};

// The image, optionally wrapped in target emulator + host driver.
struct Disk {
  std::unique_ptr<FileBackedDevice> file;
  std::unique_ptr<scsi::TargetEmulator> target;
  std::unique_ptr<LoopbackPipe> pipe;
  std::unique_ptr<scsi::ScsiBlockDevice> scsi;

  BlockDevice& device() { return scsi ? static_cast<BlockDevice&>(*scsi) : *file; }
};

Disk open_disk(const std::string& path, bool writable, bool via_scsi)
{
  if (!std::filesystem::exists(path)) {
    user_error(ErrorKind::kNotFound, "image " + path + " does not exist");
  }
  Disk d;
  OpenOptions opts;
  opts.read_only = !writable;
  d.file = open_image(path, opts);
  if (via_scsi) {
    d.target = std::make_unique<scsi::TargetEmulator>(*d.file);
    d.pipe = std::make_unique<LoopbackPipe>(*d.target);
    d.scsi = scsi::init_device(*d.pipe);
  }
  return d;
}

struct Session {
  Disk disk;
  OpenVolume volume;

  FatFileSystem& fs() { return *volume.fs; }
  void commit()
  {
    volume.fs->flush();
    disk.file->flush();
  }
};

std::unique_ptr<Session> open_session(const std::string& image, const GlobalFlags& g, bool writable)
{
  auto s = std::make_unique<Session>();
  s->disk = open_disk(image, writable, g.via_scsi);
  fat32::MountOptions mo;
  mo.update_access_date = writable;
  s->volume = open_volume(s->disk.device(), g.partition, mo);
  return s;
}

std::string hex2(std::uint32_t v)
{
  return fmt::format("{:02X}h", v);
}

std::string attr_string(const fat32::EntryMetadata& m)
{
  std::string s = "-----";
  if (m.attributes & fat32::attr::kDirectory) s[0] = 'd';
  if (m.attributes & fat32::attr::kReadOnly) s[1] = 'r';
  if (m.attributes & fat32::attr::kHidden) s[2] = 'h';
  if (m.attributes & fat32::attr::kSystem) s[3] = 's';
  if (m.attributes & fat32::attr::kArchive) s[4] = 'a';
  return s;
}

std::string time_string(const fat32::Timestamp& t)
{
  return fmt::format("{:04}-{:02}-{:02} {:02}:{:02}:{:02}", t.year, t.month, t.day, t.hour,
                     t.minute, t.second);
}

std::pair<std::string, std::string> split_parent(const std::string& path)
{
  std::string p = path;
  while (p.size() > 1 && p.back() == '/') {
    p.pop_back();
  }
  const std::size_t slash = p.rfind('/');
  if (slash == std::string::npos) {
    return {"/", p};
  }
  return {slash == 0 ? "/" : p.substr(0, slash), p.substr(slash + 1)};
}

std::optional<FatNode> try_lookup(FatFileSystem& fs, const std::string& path)
{
  try {
    return fs.lookup(path);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kNotFound) {
      return std::nullopt;
    }
    throw;
  }
}

json node_json(const FatNode& n)
{
  return json{{"name", n.name()},
              {"short_name", fat32::short_name_display(n.meta.short_name, n.meta.nt_reserved)},
              {"type", n.is_directory() ? "directory" : "file"},
              {"size", n.size()},
              {"attributes", n.meta.attributes},
              {"start_cluster", n.start_cluster()},
              {"created", time_string(n.meta.created)},
              {"written", time_string(n.meta.written)},
              {"accessed", time_string(n.meta.accessed).substr(0, 10)}};
}

void emit_ok(std::ostream& out, const GlobalFlags& g, json extra = json::object())
{
  if (g.json) {
    extra["schema_version"] = kSchemaVersion;
    extra["ok"] = true;
    out << extra.dump(2) << "\n";
  }
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -
// Subcommands

void cmd_info(const std::string& image, const GlobalFlags& g, std::ostream& out)
{
  Disk disk = open_disk(image, false, g.via_scsi);
  BlockDevice& dev = disk.device();
  const DiskLayout layout = inspect_disk(dev);

  json j;
  j["schema_version"] = kSchemaVersion;
  j["image"] = image;
  j["size_bytes"] = dev.size_bytes();
  j["block_size"] = dev.block_size();
  j["partition_table"] = layout.mbr ? "mbr" : "none";
  j["partitions"] = json::array();
  for (const VolumeLocation& v : layout.volumes) {
    if (!v.raw) {
      j["partitions"].push_back({{"index", v.index},
                                 {"type", v.partition_type},
                                 {"first_lba", v.first_lba},
                                 {"sector_count", v.sector_count},
                                 {"logical", v.logical}});
    }
  }

  fat32::MountOptions mo;
  mo.update_access_date = false;
  OpenVolume vol = open_volume(dev, g.partition, mo);
  const fat32::BootSector& b = vol.fs->boot();
  const std::string label = vol.fs->volume_label();
  j["volume"] = {{"index", g.partition},
                 {"raw", vol.location.raw},
                 {"bytes_per_sector", b.bytes_per_sector},
                 {"sectors_per_cluster", b.sectors_per_cluster},
                 {"cluster_size", b.cluster_size()},
                 {"reserved_sectors", b.reserved_sector_count},
                 {"num_fats", b.num_fats},
                 {"fat_size_sectors", b.fat_size_sectors},
                 {"total_sectors", b.total_sectors},
                 {"data_start_sector", b.data_region_start()},
                 {"cluster_count", b.cluster_count()},
                 {"root_cluster", b.root_cluster},
                 {"fat_mirroring", b.mirroring()},
                 {"volume_id", b.volume_id},
                 {"label", label},
                 {"free_clusters", vol.fs->free_clusters()},
                 {"free_bytes", vol.fs->free_bytes()}};

  if (g.json) {
    out << j.dump(2) << "\n";
    return;
  }
  out << fmt::format("image         {} ({} bytes, {} blocks of {})\n", image, dev.size_bytes(),
                     dev.block_count(), dev.block_size());
  if (layout.mbr) {
    out << "partitions    MBR\n";
    for (const VolumeLocation& v : layout.volumes) {
      out << fmt::format("  #{:<3} type {}  first LBA {:<10} sectors {:<10}{}\n", v.index,
                         hex2(v.partition_type), v.first_lba, v.sector_count,
                         v.logical ? " logical" : "");
    }
  } else {
    out << "partitions    none (FAT32 volume at LBA 0)\n";
  }
  out << fmt::format("volume #{}\n", g.partition);
  out << fmt::format("  label             {}\n", label);
  out << fmt::format("  volume id         {:08X}\n", b.volume_id);
  out << fmt::format("  bytes/sector      {}\n", b.bytes_per_sector);
  out << fmt::format("  sectors/cluster   {} ({} bytes)\n", b.sectors_per_cluster, b.cluster_size());
  out << fmt::format("  reserved sectors  {}\n", b.reserved_sector_count);
  out << fmt::format("  FATs              {} x {} sectors{}\n", b.num_fats, b.fat_size_sectors,
                     b.mirroring() ? " (mirrored)" : "");
  out << fmt::format("  total sectors     {}\n", b.total_sectors);
  out << fmt::format("  data start        sector {}\n", b.data_region_start());
  out << fmt::format("  clusters          {}\n", b.cluster_count());
  out << fmt::format("  root cluster      {}\n", b.root_cluster);
  out << fmt::format("  free              {} clusters ({} bytes)\n", vol.fs->free_clusters(),
                     vol.fs->free_bytes());
}

void cmd_ls(const std::string& image, const std::string& path, const GlobalFlags& g,
            std::ostream& out)
{
  auto s = open_session(image, g, false);
  const FatNode node = s->fs().lookup(path);
  const std::vector<FatNode> entries =
      node.is_directory() ? s->fs().list_children(node) : std::vector<FatNode>{node};
  if (g.json) {
    json j{{"schema_version", kSchemaVersion}, {"path", path}, {"entries", json::array()}};
    for (const FatNode& n : entries) {
      j["entries"].push_back(node_json(n));
    }
    out << j.dump(2) << "\n";
    return;
  }
  for (const FatNode& n : entries) {
    out << fmt::format("{} {:>10} {} {}{}\n", attr_string(n.meta), n.size(),
                       time_string(n.meta.written), n.name(), n.is_directory() ? "/" : "");
  }
}

void cmd_get(const std::string& image, const std::string& src, std::string dest,
             const GlobalFlags& g, std::ostream& out)
{
  auto s = open_session(image, g, false);
  FatNode node = s->fs().lookup(src);
  if (node.is_directory()) {
    user_error(ErrorKind::kIsADirectory, src + " is a directory");
  }
  if (dest.empty()) {
    dest = split_parent(src).second;
  }
  std::ofstream file(dest, std::ios::binary | std::ios::trunc);
  if (!file) {
    user_error(ErrorKind::kInvalidArgument, "cannot write " + dest);
  }
  Bytes buf;
  for (std::uint64_t off = 0; off < node.size(); off += kChunk) {
    buf.resize(static_cast<std::size_t>(std::min<std::uint64_t>(kChunk, node.size() - off)));
    s->fs().read(node, off, buf);
    file.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
  if (!file.flush()) {
    user_error(ErrorKind::kInvalidArgument, "short write to " + dest);
  }
  emit_ok(out, g, {{"bytes", node.size()}, {"destination", dest}});
}

void cmd_put(const std::string& image, const std::string& src, const std::string& dest,
             const GlobalFlags& g, std::ostream& out)
{
  std::ifstream file(src, std::ios::binary);
  if (!file) {
    user_error(ErrorKind::kNotFound, "cannot read " + src);
  }
  auto s = open_session(image, g, true);
  FatFileSystem& fs = s->fs();

  std::optional<FatNode> target = try_lookup(fs, dest);
  if (target && target->is_directory()) {
    const std::string name = std::filesystem::path(src).filename().string();
    const std::string inside = (dest == "/" ? "" : dest) + "/" + name;
    target = try_lookup(fs, inside);
    if (!target) {
      target = fs.create_child(fs.lookup(dest), name, fat32::NodeKind::kFile);
    }
  } else if (!target) {
    const auto [parent, name] = split_parent(dest);
    target = fs.create_child(fs.lookup(parent), name, fat32::NodeKind::kFile);
  }
  if (target->is_directory()) {
    user_error(ErrorKind::kIsADirectory, dest + " is a directory");
  }
  fs.set_size(*target, 0);

  Bytes buf(kChunk);
  std::uint64_t off = 0;
  while (file) {
    file.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    const auto n = static_cast<std::size_t>(file.gcount());
    if (n == 0) {
      break;
    }
    fs.write(*target, off, ConstByteSpan{buf.data(), n});
    off += n;
  }
  s->commit();
  emit_ok(out, g, {{"bytes", off}, {"path", dest}});
}

void cmd_mkdir(const std::string& image, const std::string& path, bool parents,
               const GlobalFlags& g, std::ostream& out)
{
  auto s = open_session(image, g, true);
  FatFileSystem& fs = s->fs();
  if (parents) {
    FatNode cur = fs.root();
    std::string walked;
    std::string rest = path;
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const std::size_t slash = rest.find('/', pos);
      const std::string part = rest.substr(pos, slash == std::string::npos ? std::string::npos : slash - pos);
      pos = slash == std::string::npos ? rest.size() + 1 : slash + 1;
      if (part.empty()) {
        continue;
      }
      walked += "/" + part;
      std::optional<FatNode> next = fs.find_child(cur, part);
      if (!next) {
        next = fs.create_child(cur, part, fat32::NodeKind::kDirectory);
      } else if (!next->is_directory()) {
        user_error(ErrorKind::kNotADirectory, walked + " exists and is not a directory");
      }
      cur = *next;
    }
  } else {
    const auto [parent, name] = split_parent(path);
    if (name.empty()) {
      user_error(ErrorKind::kExists, "/ already exists");
    }
    fs.create_child(fs.lookup(parent), name, fat32::NodeKind::kDirectory);
  }
  s->commit();
  emit_ok(out, g, {{"path", path}});
}

void remove_tree(FatFileSystem& fs, const FatNode& node)
{
  if (node.is_directory()) {
    for (const FatNode& child : fs.list_children(node)) {
      remove_tree(fs, child);
    }
  }
  fs.delete_node(node);
}

void cmd_rm(const std::string& image, const std::string& path, bool recursive,
            const GlobalFlags& g, std::ostream& out)
{
  auto s = open_session(image, g, true);
  const FatNode node = s->fs().lookup(path);
  if (recursive) {
    remove_tree(s->fs(), node);
  } else {
    s->fs().delete_node(node);
  }
  s->commit();
  emit_ok(out, g, {{"path", path}});
}

void cmd_mv(const std::string& image, const std::string& src, const std::string& dest,
            const GlobalFlags& g, std::ostream& out)
{
  auto s = open_session(image, g, true);
  FatFileSystem& fs = s->fs();
  const FatNode node = fs.lookup(src);
  std::optional<FatNode> target = try_lookup(fs, dest);
  if (target && target->is_directory() &&
      !(target->parent_cluster == node.parent_cluster && target->short_slot == node.short_slot)) {
    fs.move_node(node, *target);
  } else {
    const auto [parent, name] = split_parent(dest);
    fs.move_node(node, fs.lookup(parent), name);
  }
  s->commit();
  emit_ok(out, g, {{"from", src}, {"to", dest}});
}

void cmd_label(const std::string& image, const std::optional<std::string>& text,
               const GlobalFlags& g, std::ostream& out)
{
  auto s = open_session(image, g, text.has_value());
  if (text) {
    s->fs().set_volume_label(*text);
    s->commit();
  }
  const std::string label = s->fs().volume_label();
  if (g.json) {
    out << json{{"schema_version", kSchemaVersion}, {"label", label}}.dump(2) << "\n";
  } else if (!text) {
    out << label << "\n";
  }
}

struct MkimageArgs {
  std::string size;
  std::string label = "NO NAME";
  bool mbr = false;
  unsigned spc = 0;
  bool force = false;
};

void cmd_mkimage(const std::string& image, const MkimageArgs& a, const GlobalFlags& g,
                 std::ostream& out)
{
  const std::uint64_t size = parse_size(a.size);
  if (size % 512 != 0) {
    user_error(ErrorKind::kInvalidArgument, "image size must be a multiple of 512");
  }
  if (std::filesystem::exists(image) && !a.force) {
    user_error(ErrorKind::kExists, image + " exists (use --force to overwrite)");
  }
  fat32::FormatOptions fo;
  fo.label = a.label;
  fo.sectors_per_cluster = static_cast<std::uint8_t>(a.spc);
  if (a.spc > 128) {
    user_error(ErrorKind::kInvalidArgument, "sectors per cluster must be at most 128");
  }
  // Validate before creating anything on disk.
  fat32::make_volume_label(a.label);

  OpenOptions oo;
  oo.create_size = size;
  auto file = open_image(image, oo);
  fat32::BootSector boot;
  if (a.mbr) {
    constexpr std::uint32_t kStart = 2048;
    const std::uint64_t sectors = size / 512;
    if (sectors <= kStart || sectors - kStart > 0xFFFFFFFFu) {
      user_error(ErrorKind::kInvalidArgument, "image size unsuitable for an MBR partition at 2048");
    }
    const mbr::PartitionTableEntry part{false, mbr::type::kFat32Chs, kStart,
                                        static_cast<std::uint32_t>(sectors - kStart)};
    const auto sector0 = mbr::serialize_mbr(std::span<const mbr::PartitionTableEntry>{&part, 1});
    file->write_at(0, sector0);
    mbr::PartitionView view(*file, kStart, sectors - kStart);
    fo.hidden_sectors = kStart;
    boot = fat32::format_volume(view, fo);
  } else {
    boot = fat32::format_volume(*file, fo);
  }
  file->flush();
  if (g.json) {
    emit_ok(out, g,
            {{"image", image},
             {"size_bytes", size},
             {"mbr", a.mbr},
             {"cluster_size", boot.cluster_size()},
             {"cluster_count", boot.cluster_count()}});
  } else {
    out << fmt::format("created {} ({} bytes, {}{} clusters of {} bytes)\n", image, size,
                       a.mbr ? "MBR partition at 2048, " : "", boot.cluster_count(),
                       boot.cluster_size());
  }
}

int cmd_selftest(const std::optional<std::string>& image, const GlobalFlags& g, std::ostream& out)
{
  std::unique_ptr<FileBackedDevice> file;
  if (image) {
    if (!std::filesystem::exists(*image)) {
      user_error(ErrorKind::kNotFound, "image " + *image + " does not exist");
    }
    OpenOptions oo;
    oo.read_only = true;
    file = open_image(*image, oo);
  }
  const std::vector<ScenarioResult> results = run_loopback_selftest(file.get());
  const auto passed = std::count_if(results.begin(), results.end(),
                                    [](const ScenarioResult& r) { return r.passed; });
  const bool all = passed == static_cast<std::ptrdiff_t>(results.size());
  if (g.json) {
    json j{{"schema_version", kSchemaVersion}, {"passed", all}, {"scenarios", json::array()}};
    for (const ScenarioResult& r : results) {
      j["scenarios"].push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    }
    out << j.dump(2) << "\n";
  } else {
    for (const ScenarioResult& r : results) {
      out << fmt::format("{} {}: {}\n", r.passed ? "PASS" : "FAIL", r.name, r.detail);
    }
    out << fmt::format("{}/{} scenarios passed\n", passed, results.size());
  }
  return all ? kOk : kIoError;
}

}  // namespace

std::uint64_t parse_size(std::string_view text)
{
  std::uint64_t value = 0;
  std::size_t i = 0;
  for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
    if (value > (UINT64_MAX - 9) / 10) {
      user_error(ErrorKind::kInvalidArgument, "size " + std::string(text) + " is too large");
    }
    value = value * 10 + static_cast<std::uint64_t>(text[i] - '0');
  }
  if (i == 0) {
    user_error(ErrorKind::kInvalidArgument, "size " + std::string(text) + " is not a number");
  }
  std::string suffix(text.substr(i));
  std::transform(suffix.begin(), suffix.end(), suffix.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  int shift = 0;
  if (suffix.empty() || suffix == "B") {
    shift = 0;
  } else if (suffix == "K" || suffix == "KIB") {
    shift = 10;
  } else if (suffix == "M" || suffix == "MIB") {
    shift = 20;
  } else if (suffix == "G" || suffix == "GIB") {
    shift = 30;
  } else if (suffix == "T" || suffix == "TIB") {
    shift = 40;
  } else {
    user_error(ErrorKind::kInvalidArgument, "unknown size suffix \"" + suffix + "\"");
  }
  if (shift > 0 && value > (UINT64_MAX >> shift)) {
    user_error(ErrorKind::kInvalidArgument, "size " + std::string(text) + " is too large");
  }
  return value << shift;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"USB mass-storage stack toolkit: FAT32 disk images, optionally through a SCSI loopback",
               "umstk"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--partition", g.partition, "volume index: primaries then logicals (default 0)");
  app.add_flag("--via-scsi", g.via_scsi, "route block I/O through the BOT host and target emulator");
  app.add_flag("--json", g.json, "machine-readable output (schema_version 1)");

  std::string image;
  std::string path = "/";
  std::string src;
  std::string dest;
  bool flag = false;
  std::optional<std::string> opt_text;
  MkimageArgs mk;

  std::function<int()> action;

  auto* info = app.add_subcommand("info", "partition table, geometry, label and free space");
  info->add_option("image", image, "disk image")->required();
  info->callback([&] { action = [&] { cmd_info(image, g, out); return kOk; }; });

  auto* ls = app.add_subcommand("ls", "list a directory");
  ls->add_option("image", image, "disk image")->required();
  ls->add_option("path", path, "directory or file in the image");
  ls->callback([&] { action = [&] { cmd_ls(image, path, g, out); return kOk; }; });

  auto* get = app.add_subcommand("get", "copy a file out of the image");
  get->add_option("image", image, "disk image")->required();
  get->add_option("source", src, "file in the image")->required();
  get->add_option("destination", dest, "host file (default: same name in the current directory)");
  get->callback([&] { action = [&] { cmd_get(image, src, dest, g, out); return kOk; }; });

  auto* put = app.add_subcommand("put", "copy a host file into the image");
  put->add_option("image", image, "disk image")->required();
  put->add_option("source", src, "host file")->required();
  put->add_option("destination", dest, "file or directory in the image")->required();
  put->callback([&] { action = [&] { cmd_put(image, src, dest, g, out); return kOk; }; });

  auto* mkdir = app.add_subcommand("mkdir", "create a directory");
  mkdir->add_option("image", image, "disk image")->required();
  mkdir->add_option("path", path, "directory to create")->required();
  mkdir->add_flag("-p,--parents", flag, "create missing parents, accept existing directories");
  mkdir->callback([&] { action = [&] { cmd_mkdir(image, path, flag, g, out); return kOk; }; });

  auto* rm = app.add_subcommand("rm", "remove a file or directory");
  rm->add_option("image", image, "disk image")->required();
  rm->add_option("path", path, "file or directory")->required();
  rm->add_flag("-r,--recursive", flag, "remove directories and their contents");
  rm->callback([&] { action = [&] { cmd_rm(image, path, flag, g, out); return kOk; }; });

  auto* mv = app.add_subcommand("mv", "rename or move within the volume");
  mv->add_option("image", image, "disk image")->required();
  mv->add_option("source", src, "existing path")->required();
  mv->add_option("destination", dest, "new path or existing directory")->required();
  mv->callback([&] { action = [&] { cmd_mv(image, src, dest, g, out); return kOk; }; });

  auto* label = app.add_subcommand("label", "show or set the volume label");
  label->add_option("image", image, "disk image")->required();
  label->add_option("label", opt_text, "new label (up to 11 characters)");
  label->callback([&] { action = [&] { cmd_label(image, opt_text, g, out); return kOk; }; });

  auto* mkimage = app.add_subcommand("mkimage", "create and format a disk image");
  mkimage->add_option("image", image, "image file to create")->required();
  mkimage->add_option("--size", mk.size, "image size, e.g. 64M")->required();
  mkimage->add_option("--label", mk.label, "volume label");
  mkimage->add_flag("--mbr", mk.mbr, "add an MBR with one FAT32 partition at LBA 2048");
  mkimage->add_option("--sectors-per-cluster", mk.spc, "cluster size in sectors (default by size)");
  mkimage->add_flag("--force", mk.force, "overwrite an existing file");
  mkimage->callback([&] { action = [&] { cmd_mkimage(image, mk, g, out); return kOk; }; });

  auto* selftest = app.add_subcommand("selftest", "run the loopback protocol scenarios");
  selftest->add_option("image", opt_text, "optional image to read through the SCSI path");
  selftest->callback([&] { action = [&] { return cmd_selftest(opt_text, g, out); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUserError;
  }

  try {
    return action();
  } catch (const Error& e) {
    err << "umstk: " << e.what() << "\n";
    if (g.json) {
      out << json{{"schema_version", kSchemaVersion},
                  {"ok", false},
                  {"error",
                   {{"layer", to_string(e.layer())}, {"kind", to_string(e.kind())}, {"message", e.what()}}}}
                 .dump(2)
          << "\n";
    }
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "umstk: " << e.what() << "\n";
    return kIoError;
  }
}

}  // namespace umstk::cli
