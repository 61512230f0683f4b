#include "ingest.hpp"

#include <algorithm>
#include <cmath>

namespace ck::ingest {

void PlanckConstants::validate() const {
  if (!(fk1 > 0.0) || !(fk2 > 0.0) || !(bc2 > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "Planck constants require fk1, fk2, bc2 > 0");
}

double planck_bt(double radiance, const PlanckConstants& k) {
  return (k.fk2 / std::log1p(k.fk1 / radiance) - k.bc1) / k.bc2;
}

double planck_radiance(double bt, const PlanckConstants& k) {
  return k.fk1 / std::expm1(k.fk2 / (k.bc1 + k.bc2 * bt));
}

BTGrid radiance_to_bt(const RadianceGrid& in, const PlanckConstants& k) {
  k.validate();
  BTGrid out{Grid<float>(in.grid.width(), in.grid.height()), in.channel_id, in.geo};
  for (std::size_t i = 0; i < in.grid.size(); ++i) {
    const double l = in.grid[i];
    if (in.grid.missing(i) || !(l > 0.0) || !std::isfinite(l)) {
      out.grid.set_missing(i);
      continue;
    }
    const double bt = planck_bt(l, k);
    out.grid[i] = static_cast<float>(bt);
    if (!(bt >= kMinPhysicalBT && bt <= kMaxPhysicalBT)) out.grid.set_missing(i);
  }
  return out;
}

void AshBounds::validate() const {
  if (!(red_lo < red_hi) || !(green_lo < green_hi) || !(blue_lo < blue_hi))
    throw Error(ErrorCode::kInvalidArgument, "ash bounds require lo < hi per channel");
}

std::uint8_t scale_to_byte(double x, double lo, double hi) {
  const double t = std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(255.0 * t));
}

AshImage render_ash(const BTGrid& bt12, const BTGrid& bt11, const BTGrid& bt8,
                    const AshBounds& bounds) {
  bounds.validate();
  require_same_shape(bt12, bt11, "render_ash");
  require_same_shape(bt12, bt8, "render_ash");
  AshImage img{bt12.width(), bt12.height(), {}};
  img.rgb.assign(3 * bt12.grid.size(), 0);
  for (std::size_t i = 0; i < bt12.grid.size(); ++i) {
    if (bt12.grid.missing(i) || bt11.grid.missing(i) || bt8.grid.missing(i)) continue;
    const double t12 = bt12.grid[i], t11 = bt11.grid[i], t8 = bt8.grid[i];
    img.rgb[3 * i + 0] = scale_to_byte(t12, bounds.red_lo, bounds.red_hi);
    img.rgb[3 * i + 1] = scale_to_byte(t11 - t8, bounds.green_lo, bounds.green_hi);
    img.rgb[3 * i + 2] = scale_to_byte(t12 - t11, bounds.blue_lo, bounds.blue_hi);
  }
  return img;
}

BTGrid center_crop(const BTGrid& in) {
  BTGrid out{center_crop(in.grid), in.channel_id, in.geo};
  out.geo.corner_lat -= kCropLead * in.geo.dlat;
  out.geo.corner_lon += kCropLead * in.geo.dlon;
  return out;
}

double standardize_scale(const ChannelStats& stats, ScaleKind kind) {
  return kind == ScaleKind::kVariance ? stats.variance : std::sqrt(stats.variance);
}

Grid<float> standardize(const Grid<float>& in, double mean, double scale) {
  if (scale == 0.0 || !std::isfinite(scale))
    throw Error(ErrorCode::kInvalidArgument, "standardize: scale must be finite and non-zero");
  Grid<float> out = in;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<float>((static_cast<double>(in[i]) - mean) / scale);
  return out;
}

std::map<std::string, Grid<float>> standardize(
    const std::map<std::string, Grid<float>>& channels,
    const std::map<std::string, ChannelStats>& stats, ScaleKind kind) {
  std::map<std::string, Grid<float>> out;
  for (const auto& [name, grid] : channels) {
    auto it = stats.find(name);
    if (it == stats.end())
      throw Error(ErrorCode::kInvalidArgument, "standardize: no statistics for channel " + name);
    out.emplace(name, standardize(grid, it->second.mean, standardize_scale(it->second, kind)));
  }
  return out;
}

}  // namespace ck::ingest
