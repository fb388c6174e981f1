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

#include "umstk/fat32/dirent.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "umstk/error.hpp"
#include "umstk/log.hpp"
#include "umstk/utf.hpp"

namespace umstk::fat32 {

namespace {

constexpr std::size_t kLfnOffsets[kLfnCharsPerEntry] = {1,  3,  5,  7,  9,  14, 16,
                                                        18, 20, 22, 24, 28, 30};

bool short_char_legal(char c)
{
  if ((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) {
    return true;
  }
  return std::strchr("$%'-_@~`!(){}^#&", c) != nullptr && c != '\0';
}

bool long_char_forbidden(char16_t c)
{
  return c < 0x20 || c == 0x7F || c == u'"' || c == u'*' || c == u'/' || c == u':' ||
         c == u'<' || c == u'>' || c == u'?' || c == u'\\' || c == u'|';
}

char ascii_upper(char c)
{
  return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c;
}

char ascii_lower(char c)
{
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

// Short names are 8-bit OEM text of unknown code page; high bytes are shown as Latin-1.
std::string oem_to_utf8(std::string_view s)
{
  std::u16string wide;
  for (char c : s) {
    wide.push_back(static_cast<char16_t>(static_cast<unsigned char>(c)));
  }
  return utf16_to_utf8(wide);
}

struct Mangled {
  std::string base;
  std::string ext;
  bool lossy = false;
};

Mangled mangle(std::string_view long_name)
{
  std::string name(long_name);
  Mangled m;
  const std::size_t lead = name.find_first_not_of('.');
  if (lead != 0) {
    m.lossy = true;
    name.erase(0, lead == std::string::npos ? name.size() : lead);
  }
  const std::size_t dot = name.rfind('.');
  std::string base = dot == std::string::npos ? name : name.substr(0, dot);
  std::string ext = dot == std::string::npos ? std::string{} : name.substr(dot + 1);

  auto convert = [&m](const std::string& in, std::size_t limit) {
    std::string out;
    for (std::size_t i = 0; i < in.size(); ++i) {
      const unsigned char c = static_cast<unsigned char>(in[i]);
      if (c == ' ' || c == '.') {
        m.lossy = true;
        continue;
      }
      if (c >= 0x80) {
        // One '_' per UTF-8 sequence.
        while (i + 1 < in.size() && (static_cast<unsigned char>(in[i + 1]) & 0xC0) == 0x80) {
          ++i;
        }
        out.push_back('_');
        m.lossy = true;
        continue;
      }
      const char u = ascii_upper(static_cast<char>(c));
      if (short_char_legal(u)) {
        out.push_back(u);
      } else {
        out.push_back('_');
        m.lossy = true;
      }
    }
    if (out.size() > limit) {
      out.resize(limit);
      m.lossy = true;
    }
    return out;
  };
  m.base = convert(base, 8);
  m.ext = convert(ext, 3);
  return m;
}

ShortName pack(std::string_view base, std::string_view ext)
{
  ShortName n;
  n.fill(' ');
  std::copy_n(base.begin(), std::min<std::size_t>(base.size(), 8), n.begin());
  std::copy_n(ext.begin(), std::min<std::size_t>(ext.size(), 3), n.begin() + 8);
  return n;
}

const ShortName kDotName = pack(".", "");
const ShortName kDotDotName = pack("..", "");

Timestamp decode_date_only(std::uint16_t date)
{
  return decode_datetime(date, 0, 0);
}

void check_range(bool ok, const char* what)
{
  if (!ok) {
    throw Error(Layer::kFat32, ErrorKind::kRange, std::string("timestamp ") + what + " out of range");
  }
}

struct PendingRun {
  std::size_t count = 0;
  std::size_t next_ordinal = 0;  // next expected ordinal, 0 once complete
  std::uint8_t checksum = 0;
  std::uint32_t first_slot = 0;
  std::vector<std::u16string> parts;
};

std::u16string lfn_chars(ConstByteSpan e)
{
  std::u16string s;
  for (std::size_t off : kLfnOffsets) {
    s.push_back(static_cast<char16_t>(load_le16(e, off)));
  }
  return s;
}

}  // namespace

ShortName make_short_name(std::string_view base, std::string_view ext)
{
  return pack(base, ext);
}

std::string short_name_display(const ShortName& name, std::uint8_t nt_reserved)
{
  std::string base(name.begin(), name.begin() + 8);
  std::string ext(name.begin() + 8, name.end());
  if (!base.empty() && static_cast<std::uint8_t>(base[0]) == kKanjiE5Substitute) {
    base[0] = static_cast<char>(kDeletedMarker);
  }
  while (!base.empty() && base.back() == ' ') {
    base.pop_back();
  }
  while (!ext.empty() && ext.back() == ' ') {
    ext.pop_back();
  }
  if (nt_reserved & kNtLowerBase) {
    std::transform(base.begin(), base.end(), base.begin(), ascii_lower);
  }
  if (nt_reserved & kNtLowerExt) {
    std::transform(ext.begin(), ext.end(), ext.begin(), ascii_lower);
  }
  return oem_to_utf8(ext.empty() ? base : base + "." + ext);
}

std::uint8_t short_name_checksum(ConstByteSpan name)
{
  if (name.size() != 11) {
    throw Error(Layer::kFat32, ErrorKind::kInvalidArgument,
                "short name checksum needs 11 bytes, got " + std::to_string(name.size()));
  }
  std::uint8_t sum = 0;
  for (std::uint8_t b : name) {
    sum = static_cast<std::uint8_t>(((sum & 1) ? 0x80 : 0) + (sum >> 1) + b);
  }
  return sum;
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

FatDateTime encode_datetime(const Timestamp& t)
{
  check_range(t.year >= 1980 && t.year <= 2107, "year");
  check_range(t.month >= 1 && t.month <= 12, "month");
  check_range(t.day >= 1 && t.day <= 31, "day");
  check_range(t.hour >= 0 && t.hour <= 23, "hour");
  check_range(t.minute >= 0 && t.minute <= 59, "minute");
  check_range(t.second >= 0 && t.second <= 59, "second");
  check_range(t.centisecond >= 0 && t.centisecond <= 99, "centisecond");
  FatDateTime out;
  out.date = static_cast<std::uint16_t>(((t.year - 1980) << 9) | (t.month << 5) | t.day);
  out.time = static_cast<std::uint16_t>((t.hour << 11) | (t.minute << 5) | (t.second / 2));
  out.tenths = static_cast<std::uint8_t>((t.second % 2) * 100 + t.centisecond);
  return out;
}

Timestamp decode_datetime(std::uint16_t date, std::uint16_t time, std::uint8_t tenths)
{
  Timestamp t;
  t.year = 1980 + (date >> 9);
  t.month = (date >> 5) & 0x0F;
  t.day = date & 0x1F;
  t.hour = time >> 11;
  t.minute = (time >> 5) & 0x3F;
  t.second = (time & 0x1F) * 2;
  if (tenths < 200) {
    t.second += tenths / 100;
    t.centisecond = tenths % 100;
  }
  return t;
}

Timestamp truncate_to_two_seconds(Timestamp t)
{
  t.second -= t.second % 2;
  t.centisecond = 0;
  return t;
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

std::u16string validate_long_name(std::string_view utf8_name)
{
  const std::u16string wide = utf8_to_utf16(utf8_name);
  auto invalid = [&](const std::string& why) -> std::u16string {
    throw Error(Layer::kFat32, ErrorKind::kInvalidName,
                "invalid name \"" + std::string(utf8_name) + "\": " + why);
  };
  if (wide.empty()) {
    return invalid("empty");
  }
  if (wide.size() > kMaxLongName) {
    return invalid("longer than 255 UTF-16 units");
  }
  for (char16_t c : wide) {
    if (long_char_forbidden(c)) {
      return invalid("forbidden character");
    }
  }
  if (wide.find_first_not_of(u". ") == std::u16string::npos) {
    return invalid("only periods and spaces");
  }
  return wide;
}

ShortName generate_short_name(std::string_view long_name, const std::set<ShortName>& existing)
{
  const Mangled m = mangle(long_name);
  const std::string base = m.base.empty() ? std::string("_") : m.base;
  const bool lossy = m.lossy || m.base.empty();

  if (!lossy) {
    const ShortName plain = pack(base, m.ext);
    if (!existing.contains(plain)) {
      return plain;
    }
  }
  for (std::uint32_t n = 1; n < 1000000; ++n) {
    const std::string tail = "~" + std::to_string(n);
    const std::string head = base.substr(0, 8 - tail.size());
    const ShortName candidate = pack(head + tail, m.ext);
    if (!existing.contains(candidate)) {
      return candidate;
    }
  }
  throw Error(Layer::kFat32, ErrorKind::kExhausted,
              "no free short name alias for \"" + std::string(long_name) + "\"");
}

ShortName make_volume_label(std::string_view label)
{
  if (label.size() > 11) {
    throw Error(Layer::kFat32, ErrorKind::kInvalidName, "volume label longer than 11 characters");
  }
  ShortName packed;
  packed.fill(' ');
  const std::string text = label.empty() ? std::string("NO NAME") : fold_case(label);
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != ' ' && !short_char_legal(text[i])) {
      throw Error(Layer::kFat32, ErrorKind::kInvalidName,
                  "character '" + std::string(1, text[i]) + "' not allowed in a volume label");
    }
    packed[i] = static_cast<std::uint8_t>(text[i]);
  }
  return packed;
}

std::string fold_case(std::string_view utf8)
{
  std::string out(utf8);
  std::transform(out.begin(), out.end(), out.begin(), ascii_upper);
  return out;
}

//==#==========+==+=+=++=+++++++++++-+-+--+----- --- -- -  -  -   -

std::string EntryMetadata::name() const
{
  return long_name.empty() ? short_name_display(short_name, nt_reserved) : long_name;
}

std::array<std::uint8_t, kDirEntrySize> encode_short_entry(const EntryMetadata& meta)
{
  std::array<std::uint8_t, kDirEntrySize> e{};
  std::copy(meta.short_name.begin(), meta.short_name.end(), e.begin());
  if (e[0] == kDeletedMarker) {
    e[0] = kKanjiE5Substitute;
  }
  e[11] = meta.attributes;
  e[12] = meta.nt_reserved;
  const FatDateTime created = encode_datetime(meta.created);
  const FatDateTime written = encode_datetime(meta.written);
  const FatDateTime accessed = encode_datetime(meta.accessed);
  e[13] = created.tenths;
  store_le16(e, 14, created.time);
  store_le16(e, 16, created.date);
  store_le16(e, 18, accessed.date);
  store_le16(e, 20, static_cast<std::uint16_t>(meta.start_cluster >> 16));
  store_le16(e, 22, written.time);
  store_le16(e, 24, written.date);
  store_le16(e, 26, static_cast<std::uint16_t>(meta.start_cluster & 0xFFFF));
  store_le32(e, 28, meta.file_size);
  return e;
}

EntryMetadata decode_short_entry(ConstByteSpan e)
{
  EntryMetadata meta;
  std::copy_n(e.begin(), 11, meta.short_name.begin());
  if (meta.short_name[0] == kKanjiE5Substitute) {
    meta.short_name[0] = kDeletedMarker;
  }
  meta.attributes = e[11];
  meta.nt_reserved = e[12];
  meta.created = decode_datetime(load_le16(e, 16), load_le16(e, 14), e[13]);
  meta.accessed = decode_date_only(load_le16(e, 18));
  meta.written = decode_datetime(load_le16(e, 24), load_le16(e, 22));
  meta.start_cluster = (std::uint32_t{load_le16(e, 20)} << 16) | load_le16(e, 26);
  meta.file_size = load_le32(e, 28);
  return meta;
}

Bytes serialize_directory_entry(const EntryMetadata& meta)
{
  const auto short_entry = encode_short_entry(meta);
  if (meta.long_name.empty()) {
    return Bytes(short_entry.begin(), short_entry.end());
  }
  const std::u16string wide = validate_long_name(meta.long_name);
  const std::size_t count = lfn_entry_count(wide.size());
  const std::uint8_t checksum = short_name_checksum(ConstByteSpan{short_entry.data(), 11});

  Bytes out((count + 1) * kDirEntrySize, 0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t ordinal = count - i;
    ByteSpan e{out.data() + i * kDirEntrySize, kDirEntrySize};
    e[0] = static_cast<std::uint8_t>(ordinal | (i == 0 ? kLfnLastFlag : 0));
    e[11] = attr::kLongName;
    e[13] = checksum;
    for (std::size_t k = 0; k < kLfnCharsPerEntry; ++k) {
      const std::size_t idx = (ordinal - 1) * kLfnCharsPerEntry + k;
      const std::uint16_t unit = idx < wide.size() ? wide[idx] : idx == wide.size() ? 0x0000 : 0xFFFF;
      store_le16(e, kLfnOffsets[k], unit);
    }
  }
  std::copy(short_entry.begin(), short_entry.end(), out.begin() + count * kDirEntrySize);
  return out;
}

DirectoryListing parse_directory(ConstByteSpan bytes)
{
  DirectoryListing listing;
  listing.slot_count = static_cast<std::uint32_t>(bytes.size() / kDirEntrySize);

  std::optional<PendingRun> run;
  auto drop_run = [&run](const char* why) {
    if (run) {
      log().warn("fat32: discarding orphan LFN run at slot {}: {}", run->first_slot, why);
      run.reset();
    }
  };

  for (std::uint32_t slot = 0; slot < listing.slot_count; ++slot) {
    const ConstByteSpan e = bytes.subspan(std::size_t{slot} * kDirEntrySize, kDirEntrySize);
    if (e[0] == 0x00) {
      listing.terminator_slot = slot;
      break;
    }
    if (e[0] == kDeletedMarker) {
      drop_run("deleted entry follows");
      continue;
    }
    const std::uint8_t attributes = e[11];
    if ((attributes & 0x3F) == attr::kLongName) {
      const std::uint8_t ordinal = e[0];
      const std::size_t n = ordinal & 0x1F;
      if (ordinal & kLfnLastFlag) {
        drop_run("new run started");
        if (n == 0 || n > kMaxLfnEntries) {
          continue;
        }
        run.emplace();
        run->count = n;
        run->next_ordinal = n - 1;
        run->checksum = e[13];
        run->first_slot = slot;
        run->parts.assign(n, std::u16string{});
        run->parts[n - 1] = lfn_chars(e);
      } else if (run && run->next_ordinal != 0 && n == run->next_ordinal &&
                 e[13] == run->checksum && (ordinal & 0xE0) == 0) {
        run->parts[n - 1] = lfn_chars(e);
        --run->next_ordinal;
      } else {
        drop_run("ordinal or checksum out of sequence");
      }
      continue;
    }

    DirectoryRecord rec;
    rec.meta = decode_short_entry(e);
    rec.short_slot = slot;
    rec.first_slot = slot;

    if ((attributes & attr::kVolumeId) && !(attributes & attr::kDirectory)) {
      drop_run("volume label follows");
      rec.kind = DirectoryRecord::Kind::kVolumeLabel;
      if (!listing.volume_label) {
        std::string label(rec.meta.short_name.begin(), rec.meta.short_name.end());
        while (!label.empty() && label.back() == ' ') {
          label.pop_back();
        }
        listing.volume_label = oem_to_utf8(label);
      }
      listing.records.push_back(std::move(rec));
      continue;
    }
    if (rec.meta.short_name == kDotName) {
      rec.kind = DirectoryRecord::Kind::kDot;
    } else if (rec.meta.short_name == kDotDotName) {
      rec.kind = DirectoryRecord::Kind::kDotDot;
    }

    if (run) {
      if (run->next_ordinal == 0 && rec.kind == DirectoryRecord::Kind::kNormal &&
          short_name_checksum(e.first(11)) == run->checksum) {
        std::u16string wide;
        for (const std::u16string& part : run->parts) {
          wide += part;
        }
        const std::size_t end = wide.find(u'\0');
        if (end != std::u16string::npos) {
          wide.resize(end);
        }
        if (!wide.empty() && wide.size() <= kMaxLongName) {
          rec.meta.long_name = utf16_to_utf8(wide);
          rec.first_slot = run->first_slot;
        }
        run.reset();
      } else {
        drop_run("incomplete run or checksum mismatch");
      }
    }
    listing.records.push_back(std::move(rec));
  }
  drop_run("end of directory");
  return listing;
}

}  // namespace umstk::fat32
