#include "sampler.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "common.hpp"
#include "json.hpp"

namespace ck::sampler {
namespace {

bool is_prob(double p) { return p >= 0.0 && p <= 1.0; }

bool parse_flag(const std::string& s) {
  if (s == "1" || s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "0" || s == "false" || s == "False" || s == "FALSE") return false;
  throw Error(ErrorCode::kInvalidArgument, "bad mannstein_passed value: " + s);
}

}  // namespace

void SceneFeatures::validate() const {
  if (track_count < 0) throw Error(ErrorCode::kInvalidArgument, "scene " + scene_id + ": track_count < 0");
  if (!(max_rhi >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "scene " + scene_id + ": max_rhi < 0");
}

void KeepPolicy::validate() const {
  if (!is_prob(p_no_tracks) || !is_prob(p_few_tracks) || !is_prob(p_dry) || !is_prob(p_mannstein_fail))
    throw Error(ErrorCode::kInvalidArgument, "keep policy: probabilities must lie in [0, 1]");
  if (few_tracks_max < 0) throw Error(ErrorCode::kInvalidArgument, "keep policy: few_tracks_max < 0");
  if (!(band_lo_m <= band_hi_m)) throw Error(ErrorCode::kInvalidArgument, "keep policy: empty altitude band");
}

double keep_probability(const SceneFeatures& f, const KeepPolicy& p) {
  f.validate();
  p.validate();
  const double tracks = f.track_count == 0 ? p.p_no_tracks
                        : f.track_count < p.few_tracks_max ? p.p_few_tracks
                                                           : 1.0;
  const double rhi = f.max_rhi <= p.rhi_threshold ? p.p_dry : 1.0;
  const double line = f.mannstein_passed ? 1.0 : p.p_mannstein_fail;
  return tracks * rhi * line;
}

double stable_draw(std::uint64_t seed, const std::string& scene_id) {
  char le[8];
  for (int i = 0; i < 8; ++i) le[i] = static_cast<char>(seed >> (8 * i));
  std::uint64_t h = fnv1a64(scene_id, fnv1a64({le, 8}));
  // FNV-1a alone leaves the high bits correlated across ids that differ only
  // in their last characters; the murmur3 finalizer (a bijection) fixes that.
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ull;
  h ^= h >> 33;
  // Top 53 bits, so the result is exactly representable and stays below 1.
  return std::ldexp(static_cast<double>(h >> 11), -53);
}

bool decide_keep(const SceneFeatures& f, const KeepPolicy& p) {
  return stable_draw(p.rng_seed, f.scene_id) < keep_probability(f, p);
}

std::vector<SceneFeatures> read_features_csv(std::istream& in) {
  std::vector<SceneFeatures> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("scene_id", 0) == 0) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() != 4)
      throw Error(ErrorCode::kInvalidArgument, "features CSV line " + std::to_string(lineno) + ": expected 4 columns");
    SceneFeatures f;
    f.scene_id = cols[0];
    try {
      std::size_t used = 0;
      f.track_count = std::stoll(cols[1], &used);
      if (used != cols[1].size()) throw std::invalid_argument("trailing");
      f.max_rhi = std::stod(cols[2]);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument, "features CSV line " + std::to_string(lineno) + ": bad number");
    }
    f.mannstein_passed = parse_flag(cols[3]);
    f.validate();
    out.push_back(std::move(f));
  }
  return out;
}

void write_features_csv(std::ostream& out, const std::vector<SceneFeatures>& rows) {
  out << "scene_id,track_count,max_rhi,mannstein_passed\n";
  for (const auto& f : rows)
    out << f.scene_id << ',' << f.track_count << ',' << f.max_rhi << ',' << (f.mannstein_passed ? 1 : 0) << '\n';
}

KeepPolicy policy_from_json(const std::string& text) {
  KeepPolicy p;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "keep policy: expected a JSON object");
    for (const auto& [key, v] : j.items()) {
      if (key == "p_no_tracks") p.p_no_tracks = v.get<double>();
      else if (key == "p_few_tracks") p.p_few_tracks = v.get<double>();
      else if (key == "few_tracks_max") p.few_tracks_max = v.get<std::int64_t>();
      else if (key == "p_dry") p.p_dry = v.get<double>();
      else if (key == "rhi_threshold") p.rhi_threshold = v.get<double>();
      else if (key == "altitude_band") {
        p.band_lo_m = v.at(0).get<double>();
        p.band_hi_m = v.at(1).get<double>();
      } else if (key == "p_mannstein_fail") p.p_mannstein_fail = v.get<double>();
      else if (key == "rng_seed") p.rng_seed = v.get<std::uint64_t>();
      else throw Error(ErrorCode::kInvalidArgument, "keep policy: unknown key " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("keep policy: ") + e.what());
  }
  p.validate();
  return p;
}

}  // namespace ck::sampler
