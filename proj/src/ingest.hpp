#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "common.hpp"

namespace ck::ingest {

struct RadianceGrid {
  Grid<float> grid;  // mW/(m^2 sr cm^-1)
  std::uint32_t channel_id = 0;
  GeoTransform geo;
};

struct PlanckConstants {
  double fk1 = 0.0;
  double fk2 = 0.0;
  double bc1 = 0.0;
  double bc2 = 1.0;

  void validate() const;
};

inline constexpr double kMinPhysicalBT = 150.0;
inline constexpr double kMaxPhysicalBT = 350.0;

double planck_bt(double radiance, const PlanckConstants& k);
double planck_radiance(double bt, const PlanckConstants& k);

/// Inverts the Planck function per pixel. Non-positive radiances and results
/// outside the physical range are flagged missing; the computed value is kept
/// for flagged out-of-range pixels so callers can inspect it.
BTGrid radiance_to_bt(const RadianceGrid& grid, const PlanckConstants& k);

/// Value bounds (K) mapped to 0..255 for each colour channel.
struct AshBounds {
  double red_lo = 243.0, red_hi = 303.0;    // 12 um
  double green_lo = -4.0, green_hi = 5.0;   // 11 - 8 um
  double blue_lo = -4.0, blue_hi = 2.0;     // 12 - 11 um

  void validate() const;
};

struct AshImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // interleaved, row-major

  std::uint8_t r(int row, int col) const { return rgb[3 * (row * width + col)]; }
  std::uint8_t g(int row, int col) const { return rgb[3 * (row * width + col) + 1]; }
  std::uint8_t b(int row, int col) const { return rgb[3 * (row * width + col) + 2]; }
};

std::uint8_t scale_to_byte(double x, double lo, double hi);

AshImage render_ash(const BTGrid& bt12, const BTGrid& bt11, const BTGrid& bt8,
                    const AshBounds& bounds = {});

inline constexpr int kLabelerSize = 281;
inline constexpr int kPatchSize = 256;
inline constexpr int kCropLead = 12;
inline constexpr int kCropTrail = 13;

template <typename T>
Grid<T> center_crop(const Grid<T>& in) {
  if (in.width() != kLabelerSize || in.height() != kLabelerSize)
    throw Error(ErrorCode::kShapeMismatch, "center_crop expects a 281x281 raster");
  Grid<T> out(kPatchSize, kPatchSize);
  for (int r = 0; r < kPatchSize; ++r)
    for (int c = 0; c < kPatchSize; ++c) {
      out.at(r, c) = in.at(r + kCropLead, c + kCropLead);
      out.set_missing(r, c, in.missing(r + kCropLead, c + kCropLead));
    }
  return out;
}

/// Inverse of center_crop: pads a 256x256 raster with 12 leading and 13
/// trailing rows/columns of `fill`.
template <typename T>
Grid<T> pad_to_labeler(const Grid<T>& in, T fill = T{}) {
  if (in.width() != kPatchSize || in.height() != kPatchSize)
    throw Error(ErrorCode::kShapeMismatch, "pad_to_labeler expects a 256x256 raster");
  Grid<T> out(kLabelerSize, kLabelerSize, fill);
  for (int r = 0; r < kPatchSize; ++r)
    for (int c = 0; c < kPatchSize; ++c) {
      out.at(r + kCropLead, c + kCropLead) = in.at(r, c);
      out.set_missing(r + kCropLead, c + kCropLead, in.missing(r, c));
    }
  return out;
}

BTGrid center_crop(const BTGrid& in);

enum class ScaleKind { kVariance, kStddev };

struct ChannelStats {
  double mean = 0.0;
  double variance = 1.0;
};

/// Divisor implied by the configured scale kind. Variance is the default
/// because that is how the reference pipeline describes it.
double standardize_scale(const ChannelStats& stats, ScaleKind kind = ScaleKind::kVariance);

Grid<float> standardize(const Grid<float>& in, double mean, double scale);

/// Standardizes every named channel with its own statistics.
std::map<std::string, Grid<float>> standardize(
    const std::map<std::string, Grid<float>>& channels,
    const std::map<std::string, ChannelStats>& stats, ScaleKind kind = ScaleKind::kVariance);

}  // namespace ck::ingest
