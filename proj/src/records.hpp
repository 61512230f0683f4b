#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "common.hpp"

namespace ck::records {

// CRC-32C (Castagnoli, reflected polynomial 0x82F63B78).
std::uint32_t crc32c(std::span<const std::uint8_t> data, std::uint32_t crc = 0);
std::uint32_t crc32c(std::string_view data, std::uint32_t crc = 0);
std::uint32_t mask_crc(std::uint32_t crc);
std::uint32_t unmask_crc(std::uint32_t masked);

// Framing: u64 length | masked crc(length) | payload | masked crc(payload).
inline constexpr std::size_t kFrameOverhead = 16;

void write_frame(std::ostream& out, std::string_view payload);
std::string frame(std::string_view payload);

/// Sequential frame reader over a stream. Errors carry the record index and
/// byte offset of the failing frame.
class FrameReader {
 public:
  explicit FrameReader(std::istream& in) : in_(in) {}

  /// Next payload, or nullopt at a clean end of stream.
  std::optional<std::string> next();

  std::size_t records_read() const noexcept { return index_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::istream& in_;
  std::size_t index_ = 0;
  std::uint64_t offset_ = 0;
};

std::vector<std::string> read_all_frames(std::istream& in);

// ---- Feature payload (flat key -> typed list message) ----

struct Feature {
  enum class Kind : std::uint8_t { kBytes = 1, kFloat = 2, kInt64 = 3 };
  Kind kind = Kind::kBytes;
  std::vector<std::string> bytes;
  std::vector<float> floats;
  std::vector<std::int64_t> ints;

  static Feature of_bytes(std::string b) { Feature f; f.kind = Kind::kBytes; f.bytes.push_back(std::move(b)); return f; }
  static Feature of_floats(std::vector<float> v) { Feature f; f.kind = Kind::kFloat; f.floats = std::move(v); return f; }
  static Feature of_ints(std::vector<std::int64_t> v) { Feature f; f.kind = Kind::kInt64; f.ints = std::move(v); return f; }
};

/// Key/value pairs in wire order; raw holds the encoded Feature message.
struct RawEntry {
  std::string key;
  std::string raw;
};

std::string encode_feature(const Feature& f);
Feature decode_feature(std::string_view raw);
std::string encode_entries(std::span<const RawEntry> entries);
std::vector<RawEntry> decode_entries(std::string_view payload);

// ---- ExampleRecord ----

inline constexpr int kMaskSide = 256;
inline constexpr std::size_t kMaskPixels = kMaskSide * kMaskSide;

inline constexpr std::string_view kBtPrefix = "brightness_temperature_";
inline constexpr std::string_view kIndividualMasksKey = "human_individual_masks";
inline constexpr std::string_view kPixelMasksKey = "human_pixel_masks";
inline constexpr std::string_view kTimestampKey = "timestamp";
inline constexpr std::string_view kCenterLatKey = "center_lat";
inline constexpr std::string_view kCenterLonKey = "center_lon";
inline constexpr std::string_view kSequenceKey = "sequence_timestamps";

struct ExampleRecord {
  std::map<std::string, Grid<float>> channels;  // band name -> 256x256 grid
  std::vector<BinaryMask> labeler_masks;
  BinaryMask aggregated_mask;
  std::int64_t timestamp = 0;  // epoch seconds, UTC
  float center_lat = 0.0f;
  float center_lon = 0.0f;
  std::vector<std::int64_t> sequence;  // frame timestamps: 5 before, target, 2 after

  std::vector<RawEntry> unknown;    // preserved verbatim
  std::vector<std::string> key_order;  // wire order seen on decode

  /// Structural checks: mask sizes, labeler count, sequence ordering.
  void validate() const;

  friend bool operator==(const ExampleRecord& a, const ExampleRecord& b);
};

std::string encode_example(const ExampleRecord& rec);
ExampleRecord decode_example(std::string_view payload);

void write_records(std::ostream& out, std::span<const ExampleRecord> recs);
std::vector<ExampleRecord> read_records(std::istream& in);

/// Streaming reader yielding decoded records one at a time.
class RecordReader {
 public:
  explicit RecordReader(std::istream& in) : frames_(in) {}
  std::optional<ExampleRecord> next();
  std::size_t records_read() const noexcept { return frames_.records_read(); }

 private:
  FrameReader frames_;
};

}  // namespace ck::records
