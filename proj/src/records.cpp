#include "records.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace ck::records {
namespace {

using Table = std::array<std::array<std::uint32_t, 256>, 8>;

const Table& crc_tables() {
  static const Table t = [] {
    Table tab{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0x82F63B78u & (0u - (c & 1u)));
      tab[0][i] = c;
    }
    for (std::uint32_t i = 0; i < 256; ++i)
      for (int s = 1; s < 8; ++s) tab[s][i] = (tab[s - 1][i] >> 8) ^ tab[0][tab[s - 1][i] & 0xFF];
    return tab;
  }();
  return t;
}

std::uint32_t crc32c_sw(const std::uint8_t* p, std::size_t n, std::uint32_t crc) {
  const Table& t = crc_tables();
  crc = ~crc;
  while (n >= 8) {
    std::uint32_t lo, hi;
    std::memcpy(&lo, p, 4);
    std::memcpy(&hi, p + 4, 4);
    lo ^= crc;
    crc = t[7][lo & 0xFF] ^ t[6][(lo >> 8) & 0xFF] ^ t[5][(lo >> 16) & 0xFF] ^ t[4][lo >> 24] ^
          t[3][hi & 0xFF] ^ t[2][(hi >> 8) & 0xFF] ^ t[1][(hi >> 16) & 0xFF] ^ t[0][hi >> 24];
    p += 8;
    n -= 8;
  }
  while (n--) crc = (crc >> 8) ^ t[0][(crc ^ *p++) & 0xFF];
  return ~crc;
}

#if defined(__x86_64__) && defined(__GNUC__)
__attribute__((target("sse4.2"))) std::uint32_t crc32c_hw(const std::uint8_t* p, std::size_t n,
                                                          std::uint32_t crc) {
  std::uint64_t c = ~crc;
  while (n >= 8) {
    std::uint64_t v;
    std::memcpy(&v, p, 8);
    c = __builtin_ia32_crc32di(c, v);
    p += 8;
    n -= 8;
  }
  std::uint32_t c32 = static_cast<std::uint32_t>(c);
  while (n--) c32 = __builtin_ia32_crc32qi(c32, *p++);
  return ~c32;
}

bool have_hw_crc() {
  static const bool ok = __builtin_cpu_supports("sse4.2");
  return ok;
}
#endif

// The stream layer is little-endian regardless of host order.
void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& s, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
std::uint64_t get_le(const char* p, int n) {
  std::uint64_t v = 0;
  for (int i = n - 1; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(p[i]);
  return v;
}

// ---- wire helpers ----

enum WireType : std::uint32_t { kVarint = 0, kFixed64 = 1, kLen = 2, kFixed32 = 5 };

void put_varint(std::string& s, std::uint64_t v) {
  while (v >= 0x80) {
    s.push_back(static_cast<char>((v & 0x7F) | 0x80));
    v >>= 7;
  }
  s.push_back(static_cast<char>(v));
}

void put_tag(std::string& s, std::uint32_t field, WireType wt) { put_varint(s, (field << 3) | wt); }

std::size_t varint_size(std::uint64_t v) {
  std::size_t n = 1;
  while (v >= 0x80) {
    v >>= 7;
    ++n;
  }
  return n;
}

void put_len_header(std::string& s, std::uint32_t field, std::size_t body_size) {
  put_tag(s, field, kLen);
  put_varint(s, body_size);
}

void put_len(std::string& s, std::uint32_t field, std::string_view body) {
  put_len_header(s, field, body.size());
  s.append(body);
}

// Encoded size of a length-delimited field with a one-byte tag.
std::size_t len_field_size(std::size_t body_size) { return 1 + varint_size(body_size) + body_size; }

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::kCorruptRecord, "malformed payload: " + what);
}

class Cursor {
 public:
  explicit Cursor(std::string_view d) : d_(d) {}
  bool done() const { return pos_ >= d_.size(); }

  std::uint64_t varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      if (done()) malformed("truncated varint");
      const auto b = static_cast<std::uint8_t>(d_[pos_++]);
      v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
      if (!(b & 0x80)) return v;
    }
    malformed("varint too long");
  }

  std::string_view bytes(std::size_t n) {
    if (n > d_.size() - pos_) malformed("length exceeds message");
    auto out = d_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::string_view len_delimited() { return bytes(varint()); }

  void skip(std::uint32_t wt) {
    switch (wt) {
      case kVarint: varint(); break;
      case kFixed64: bytes(8); break;
      case kLen: len_delimited(); break;
      case kFixed32: bytes(4); break;
      default: malformed("unsupported wire type " + std::to_string(wt));
    }
  }

 private:
  std::string_view d_;
  std::size_t pos_ = 0;
};

float load_float(const char* p) {
  const auto bits = static_cast<std::uint32_t>(get_le(p, 4));
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

void store_floats(std::string& s, std::span<const float> v) {
  const std::size_t at = s.size();
  s.resize(at + 4 * v.size());
  char* out = s.data() + at;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out, v.data(), 4 * v.size());
  } else {
    for (float f : v) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      for (int i = 0; i < 4; ++i) *out++ = static_cast<char>((bits >> (8 * i)) & 0xFF);
    }
  }
}

}  // namespace

std::uint32_t crc32c(std::span<const std::uint8_t> data, std::uint32_t crc) {
#if defined(__x86_64__) && defined(__GNUC__)
  if (have_hw_crc()) return crc32c_hw(data.data(), data.size(), crc);
#endif
  return crc32c_sw(data.data(), data.size(), crc);
}

std::uint32_t crc32c(std::string_view data, std::uint32_t crc) {
  return crc32c(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()), crc);
}

std::uint32_t mask_crc(std::uint32_t crc) { return ((crc >> 15) | (crc << 17)) + 0xa282ead8u; }

std::uint32_t unmask_crc(std::uint32_t masked) {
  const std::uint32_t rot = masked - 0xa282ead8u;
  return (rot >> 17) | (rot << 15);
}

std::string frame(std::string_view payload) {
  std::string out;
  out.reserve(payload.size() + kFrameOverhead);
  put_u64(out, payload.size());
  put_u32(out, mask_crc(crc32c(std::string_view(out.data(), 8))));
  out.append(payload);
  put_u32(out, mask_crc(crc32c(payload)));
  return out;
}

void write_frame(std::ostream& out, std::string_view payload) {
  std::string head;
  put_u64(head, payload.size());
  put_u32(head, mask_crc(crc32c(std::string_view(head.data(), 8))));
  std::string tail;
  put_u32(tail, mask_crc(crc32c(payload)));
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  out.write(tail.data(), static_cast<std::streamsize>(tail.size()));
  if (!out) throw Error(ErrorCode::kIo, "write_frame: stream write failed");
}

std::optional<std::string> FrameReader::next() {
  const auto where = [&] {
    return "record " + std::to_string(index_) + " at byte offset " + std::to_string(offset_);
  };
  char head[12];
  in_.read(head, sizeof head);
  const auto got = in_.gcount();
  if (got == 0) return std::nullopt;
  if (got < static_cast<std::streamsize>(sizeof head))
    throw Error(ErrorCode::kTruncated, where() + ": truncated header");
  const std::uint64_t len = get_le(head, 8);
  const auto len_crc = static_cast<std::uint32_t>(get_le(head + 8, 4));
  if (mask_crc(crc32c(std::string_view(head, 8))) != len_crc)
    throw Error(ErrorCode::kCorruptRecord, where() + ": length CRC mismatch");

  std::string payload;
  // Read in bounded chunks so a huge (but CRC-valid) length on a short
  // stream reports truncation instead of allocating up front.
  constexpr std::uint64_t kChunk = 1 << 24;
  std::uint64_t remaining = len;
  while (remaining > 0) {
    const auto n = static_cast<std::size_t>(std::min(remaining, kChunk));
    const std::size_t old = payload.size();
    payload.resize(old + n);
    in_.read(payload.data() + old, static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n))
      throw Error(ErrorCode::kTruncated, where() + ": truncated payload");
    remaining -= n;
  }
  char tail[4];
  in_.read(tail, 4);
  if (in_.gcount() != 4) throw Error(ErrorCode::kTruncated, where() + ": truncated payload CRC");
  if (mask_crc(crc32c(payload)) != static_cast<std::uint32_t>(get_le(tail, 4)))
    throw Error(ErrorCode::kCorruptRecord, where() + ": payload CRC mismatch");
  offset_ += len + kFrameOverhead;
  ++index_;
  return payload;
}

std::vector<std::string> read_all_frames(std::istream& in) {
  FrameReader r(in);
  std::vector<std::string> out;
  while (auto p = r.next()) out.push_back(std::move(*p));
  return out;
}

// ---- features ----

std::string encode_feature(const Feature& f) {
  // Sizes first so the nested list is written once, straight into the output.
  std::size_t list_size = 0, packed_size = 0;
  switch (f.kind) {
    case Feature::Kind::kBytes:
      for (const auto& b : f.bytes) list_size += len_field_size(b.size());
      break;
    case Feature::Kind::kFloat:
      packed_size = 4 * f.floats.size();
      if (packed_size) list_size = len_field_size(packed_size);
      break;
    case Feature::Kind::kInt64:
      for (auto v : f.ints) packed_size += varint_size(static_cast<std::uint64_t>(v));
      if (packed_size) list_size = len_field_size(packed_size);
      break;
  }
  std::string out;
  out.reserve(len_field_size(list_size));
  put_len_header(out, static_cast<std::uint32_t>(f.kind), list_size);
  switch (f.kind) {
    case Feature::Kind::kBytes:
      for (const auto& b : f.bytes) put_len(out, 1, b);
      break;
    case Feature::Kind::kFloat:
      if (packed_size) {
        put_len_header(out, 1, packed_size);
        store_floats(out, f.floats);
      }
      break;
    case Feature::Kind::kInt64:
      if (packed_size) {
        put_len_header(out, 1, packed_size);
        for (auto v : f.ints) put_varint(out, static_cast<std::uint64_t>(v));
      }
      break;
  }
  return out;
}

Feature decode_feature(std::string_view raw) {
  Feature f;
  bool seen = false;
  Cursor cur(raw);
  while (!cur.done()) {
    const auto tag = cur.varint();
    const auto field = static_cast<std::uint32_t>(tag >> 3);
    const auto wt = static_cast<std::uint32_t>(tag & 7);
    if (field < 1 || field > 3 || wt != kLen) {
      cur.skip(wt);
      continue;
    }
    f.kind = static_cast<Feature::Kind>(field);
    seen = true;
    Cursor list(cur.len_delimited());
    while (!list.done()) {
      const auto ltag = list.varint();
      const auto lwt = static_cast<std::uint32_t>(ltag & 7);
      if ((ltag >> 3) != 1) {
        list.skip(lwt);
        continue;
      }
      if (f.kind == Feature::Kind::kBytes && lwt == kLen) {
        f.bytes.emplace_back(list.len_delimited());
      } else if (f.kind == Feature::Kind::kFloat && lwt == kLen) {
        auto packed = list.len_delimited();
        if (packed.size() % 4) malformed("packed float list length");
        f.floats.reserve(f.floats.size() + packed.size() / 4);
        for (std::size_t i = 0; i < packed.size(); i += 4) f.floats.push_back(load_float(packed.data() + i));
      } else if (f.kind == Feature::Kind::kFloat && lwt == kFixed32) {
        f.floats.push_back(load_float(list.bytes(4).data()));
      } else if (f.kind == Feature::Kind::kInt64 && lwt == kLen) {
        Cursor packed(list.len_delimited());
        while (!packed.done()) f.ints.push_back(static_cast<std::int64_t>(packed.varint()));
      } else if (f.kind == Feature::Kind::kInt64 && lwt == kVarint) {
        f.ints.push_back(static_cast<std::int64_t>(list.varint()));
      } else {
        malformed("list element wire type");
      }
    }
  }
  if (!seen) malformed("feature without a typed list");
  return f;
}

std::string encode_entries(std::span<const RawEntry> entries) {
  auto entry_size = [](const RawEntry& e) { return len_field_size(e.key.size()) + len_field_size(e.raw.size()); };
  std::size_t features_size = 0;
  for (const auto& e : entries) features_size += len_field_size(entry_size(e));
  std::string out;
  out.reserve(len_field_size(features_size));
  put_len_header(out, 1, features_size);
  for (const auto& e : entries) {
    put_len_header(out, 1, entry_size(e));
    put_len(out, 1, e.key);
    put_len(out, 2, e.raw);
  }
  return out;
}

std::vector<RawEntry> decode_entries(std::string_view payload) {
  std::vector<RawEntry> out;
  Cursor ex(payload);
  while (!ex.done()) {
    const auto tag = ex.varint();
    if ((tag >> 3) != 1 || (tag & 7) != kLen) {
      ex.skip(static_cast<std::uint32_t>(tag & 7));
      continue;
    }
    Cursor feats(ex.len_delimited());
    while (!feats.done()) {
      const auto ftag = feats.varint();
      if ((ftag >> 3) != 1 || (ftag & 7) != kLen) {
        feats.skip(static_cast<std::uint32_t>(ftag & 7));
        continue;
      }
      Cursor entry(feats.len_delimited());
      RawEntry e;
      while (!entry.done()) {
        const auto etag = entry.varint();
        const auto wt = static_cast<std::uint32_t>(etag & 7);
        if ((etag >> 3) == 1 && wt == kLen) e.key = std::string(entry.len_delimited());
        else if ((etag >> 3) == 2 && wt == kLen) e.raw = std::string(entry.len_delimited());
        else entry.skip(wt);
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

// ---- ExampleRecord ----

namespace {

std::string mask_bytes(const BinaryMask& m) {
  return std::string(reinterpret_cast<const char*>(m.values().data()), m.size());
}

BinaryMask mask_from(std::string_view b) {
  BinaryMask m(kMaskSide, kMaskSide);
  std::memcpy(m.values().data(), b.data(), kMaskPixels);
  return m;
}

const Feature& expect(const Feature& f, Feature::Kind kind, const std::string& key) {
  if (f.kind != kind) malformed("key " + key + " has an unexpected list type");
  return f;
}

}  // namespace

void ExampleRecord::validate() const {
  for (const auto& [name, g] : channels)
    if (g.width() != kMaskSide || g.height() != kMaskSide)
      throw Error(ErrorCode::kShapeMismatch, "channel " + name + " is not 256x256");
  if (labeler_masks.empty())
    throw Error(ErrorCode::kInvalidArgument, "record needs at least one labeler mask");
  for (const auto& m : labeler_masks)
    if (m.width() != kMaskSide || m.height() != kMaskSide)
      throw Error(ErrorCode::kShapeMismatch, "labeler mask is not 256x256");
  if (aggregated_mask.width() != kMaskSide || aggregated_mask.height() != kMaskSide)
    throw Error(ErrorCode::kShapeMismatch, "aggregated mask is not 256x256");
  if (!sequence.empty()) {
    if (sequence.size() != 8)
      throw Error(ErrorCode::kInvalidArgument, "sequence must hold 8 frame timestamps");
    if (!std::is_sorted(sequence.begin(), sequence.end()) ||
        std::adjacent_find(sequence.begin(), sequence.end()) != sequence.end())
      throw Error(ErrorCode::kInvalidArgument, "sequence timestamps must be strictly increasing");
    if (sequence[5] != timestamp)
      throw Error(ErrorCode::kInvalidArgument, "sequence frame 5 must be the record timestamp");
  }
}

bool operator==(const ExampleRecord& a, const ExampleRecord& b) {
  auto same_unknown = [](const RawEntry& x, const RawEntry& y) { return x.key == y.key && x.raw == y.raw; };
  return a.channels == b.channels && a.labeler_masks == b.labeler_masks &&
         a.aggregated_mask == b.aggregated_mask && a.timestamp == b.timestamp &&
         a.center_lat == b.center_lat && a.center_lon == b.center_lon && a.sequence == b.sequence &&
         std::equal(a.unknown.begin(), a.unknown.end(), b.unknown.begin(), b.unknown.end(), same_unknown);
}

std::string encode_example(const ExampleRecord& rec) {
  std::vector<RawEntry> entries;
  for (const auto& [name, g] : rec.channels) {
    std::vector<float> v(g.values().begin(), g.values().end());
    entries.push_back({std::string(kBtPrefix) + name, encode_feature(Feature::of_floats(std::move(v)))});
  }
  if (!rec.labeler_masks.empty()) {
    std::string all;
    all.reserve(rec.labeler_masks.size() * kMaskPixels);
    for (const auto& m : rec.labeler_masks) {
      if (m.size() != kMaskPixels) throw Error(ErrorCode::kShapeMismatch, "labeler mask is not 256x256");
      all.append(reinterpret_cast<const char*>(m.values().data()), m.size());
    }
    entries.push_back({std::string(kIndividualMasksKey), encode_feature(Feature::of_bytes(std::move(all)))});
  }
  if (!rec.aggregated_mask.empty()) {
    if (rec.aggregated_mask.size() != kMaskPixels)
      throw Error(ErrorCode::kShapeMismatch, "aggregated mask is not 256x256");
    entries.push_back({std::string(kPixelMasksKey), encode_feature(Feature::of_bytes(mask_bytes(rec.aggregated_mask)))});
  }
  entries.push_back({std::string(kTimestampKey), encode_feature(Feature::of_ints({rec.timestamp}))});
  entries.push_back({std::string(kCenterLatKey), encode_feature(Feature::of_floats({rec.center_lat}))});
  entries.push_back({std::string(kCenterLonKey), encode_feature(Feature::of_floats({rec.center_lon}))});
  if (!rec.sequence.empty())
    entries.push_back({std::string(kSequenceKey), encode_feature(Feature::of_ints(rec.sequence))});
  for (const auto& u : rec.unknown) entries.push_back(u);

  if (rec.key_order.empty()) return encode_entries(entries);

  // Honour the decoded wire order; keys not seen on decode follow in default order.
  std::vector<RawEntry> ordered;
  ordered.reserve(entries.size());
  std::vector<bool> used(entries.size(), false);
  for (const auto& key : rec.key_order) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (!used[i] && entries[i].key == key) {
        ordered.push_back(entries[i]);
        used[i] = true;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (!used[i]) ordered.push_back(entries[i]);
  return encode_entries(ordered);
}

ExampleRecord decode_example(std::string_view payload) {
  ExampleRecord rec;
  for (auto& e : decode_entries(payload)) {
    rec.key_order.push_back(e.key);
    const std::string& key = e.key;
    if (key.starts_with(kBtPrefix)) {
      const Feature f = decode_feature(e.raw);
      expect(f, Feature::Kind::kFloat, key);
      if (f.floats.size() != kMaskPixels) malformed("key " + key + " must hold 256x256 floats");
      Grid<float> g(kMaskSide, kMaskSide);
      std::copy(f.floats.begin(), f.floats.end(), g.values().begin());
      rec.channels.insert_or_assign(key.substr(kBtPrefix.size()), std::move(g));
    } else if (key == kIndividualMasksKey) {
      const Feature f = decode_feature(e.raw);
      expect(f, Feature::Kind::kBytes, key);
      std::string joined;
      if (f.bytes.size() != 1)
        for (const auto& b : f.bytes) joined += b;
      const std::string_view all = f.bytes.size() == 1 ? std::string_view(f.bytes[0]) : std::string_view(joined);
      if (all.empty() || all.size() % kMaskPixels) malformed("key " + key + " must hold N x 256x256 bytes");
      for (std::size_t off = 0; off < all.size(); off += kMaskPixels)
        rec.labeler_masks.push_back(mask_from(all.substr(off, kMaskPixels)));
    } else if (key == kPixelMasksKey) {
      const Feature f = decode_feature(e.raw);
      expect(f, Feature::Kind::kBytes, key);
      if (f.bytes.size() != 1 || f.bytes[0].size() != kMaskPixels)
        malformed("key " + key + " must hold 256x256 bytes");
      rec.aggregated_mask = mask_from(f.bytes[0]);
    } else if (key == kTimestampKey) {
      const Feature f = decode_feature(e.raw);
      expect(f, Feature::Kind::kInt64, key);
      if (f.ints.size() != 1) malformed("key timestamp must hold one int64");
      rec.timestamp = f.ints[0];
    } else if (key == kCenterLatKey || key == kCenterLonKey) {
      const Feature f = decode_feature(e.raw);
      expect(f, Feature::Kind::kFloat, key);
      if (f.floats.size() != 1) malformed("key " + key + " must hold one float");
      (key == kCenterLatKey ? rec.center_lat : rec.center_lon) = f.floats[0];
    } else if (key == kSequenceKey) {
      const Feature f = decode_feature(e.raw);
      expect(f, Feature::Kind::kInt64, key);
      rec.sequence = f.ints;
    } else {
      rec.unknown.push_back(std::move(e));
    }
  }
  return rec;
}

void write_records(std::ostream& out, std::span<const ExampleRecord> recs) {
  for (const auto& r : recs) write_frame(out, encode_example(r));
}

std::optional<ExampleRecord> RecordReader::next() {
  const std::size_t index = frames_.records_read();
  auto payload = frames_.next();
  if (!payload) return std::nullopt;
  try {
    return decode_example(*payload);
  } catch (const Error& e) {
    throw Error(e.code(), "record " + std::to_string(index) + ": " + e.what());
  }
}

std::vector<ExampleRecord> read_records(std::istream& in) {
  RecordReader r(in);
  std::vector<ExampleRecord> out;
  while (auto rec = r.next()) out.push_back(std::move(*rec));
  return out;
}

}  // namespace ck::records
