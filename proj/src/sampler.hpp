#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ck::sampler {

struct SceneFeatures {
  std::string scene_id;
  std::int64_t track_count = 0;
  double max_rhi = 0.0;  // percent, 7-12 km band
  bool mannstein_passed = false;

  void validate() const;
};

struct KeepPolicy {
  double p_no_tracks = 0.05;
  double p_few_tracks = 0.20;
  std::int64_t few_tracks_max = 10;
  double p_dry = 0.05;
  double rhi_threshold = 90.0;
  double band_lo_m = 7000.0, band_hi_m = 12000.0;
  double p_mannstein_fail = 0.05;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Product of the track, humidity and line-screen factors.
double keep_probability(const SceneFeatures& f, const KeepPolicy& p);

/// FNV-1a 64 over the seed (8 bytes, little-endian) followed by the scene id,
/// passed through the murmur3 64-bit finalizer and scaled to [0, 1).
double stable_draw(std::uint64_t seed, const std::string& scene_id);

bool decide_keep(const SceneFeatures& f, const KeepPolicy& p);

/// Columns scene_id,track_count,max_rhi,mannstein_passed; header optional.
std::vector<SceneFeatures> read_features_csv(std::istream& in);
void write_features_csv(std::ostream& out, const std::vector<SceneFeatures>& rows);

/// JSON object with any subset of the KeepPolicy field names.
KeepPolicy policy_from_json(const std::string& text);

}  // namespace ck::sampler
