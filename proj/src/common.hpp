#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ck {

enum class ErrorCode : int {
  kInvalidArgument = 1,
  kShapeMismatch = 2,
  kCorruptRecord = 3,
  kTruncated = 4,
  kIo = 5,
  kNotFound = 6,
  kUndefined = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Row-major 2-D raster. Missing pixels live in a separate flag plane so
/// arithmetic never sees sentinel values.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width <= 0 || height <= 0)
      throw Error(ErrorCode::kInvalidArgument, "grid dimensions must be positive");
    values_.assign(static_cast<std::size_t>(width) * height, fill);
    missing_.assign(values_.size(), 0);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::size_t index(int r, int c) const noexcept {
    return static_cast<std::size_t>(r) * width_ + c;
  }
  bool contains(int r, int c) const noexcept {
    return r >= 0 && c >= 0 && r < height_ && c < width_;
  }

  T& at(int r, int c) { return values_[index(r, c)]; }
  const T& at(int r, int c) const { return values_[index(r, c)]; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  bool missing(int r, int c) const { return missing_[index(r, c)] != 0; }
  bool missing(std::size_t i) const { return missing_[i] != 0; }
  void set_missing(int r, int c, bool m = true) { missing_[index(r, c)] = m ? 1 : 0; }
  void set_missing(std::size_t i, bool m = true) { missing_[i] = m ? 1 : 0; }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }
  std::span<std::uint8_t> missing_flags() noexcept { return missing_; }
  std::span<const std::uint8_t> missing_flags() const noexcept { return missing_; }

  std::size_t missing_count() const noexcept {
    std::size_t n = 0;
    for (auto m : missing_) n += m != 0;
    return n;
  }

  bool same_shape(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> values_;
  std::vector<std::uint8_t> missing_;
};

/// Regular lat/lon georeference: lat/lon at the center of pixel (0,0) and
/// per-pixel spacing (rows run south, so lat decreases with row).
struct GeoTransform {
  double corner_lat = 0.0;
  double corner_lon = 0.0;
  double dlat = 0.0;  // degrees per row, positive
  double dlon = 0.0;  // degrees per column, positive

  friend bool operator==(const GeoTransform&, const GeoTransform&) = default;
};

/// Brightness temperatures (K) or any other float raster in the toolkit.
struct BTGrid {
  Grid<float> grid;
  std::uint32_t channel_id = 0;
  GeoTransform geo;

  int width() const noexcept { return grid.width(); }
  int height() const noexcept { return grid.height(); }
};

using ProbabilityMask = Grid<float>;
using BinaryMask = Grid<std::uint8_t>;

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": dimension mismatch");
}

/// Probability rasters are float32, so thresholds are compared at float
/// precision: a stored 0.35f counts as reaching a threshold of 0.35.
inline bool reaches(float value, double threshold) { return value >= static_cast<float>(threshold); }

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ull;

/// 64-bit FNV-1a, continuing from `h`.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffsetBasis) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::size_t count_positive(const BinaryMask& m) {
  std::size_t n = 0;
  for (auto v : m.values()) n += v != 0;
  return n;
}

}  // namespace ck
