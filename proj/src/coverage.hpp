#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"

namespace ck::coverage {

/// A detection tile placed on the mosaic lattice at (row0, col0).
struct TileDetection {
  ProbabilityMask prob;
  int row0 = 0;
  int col0 = 0;
  double timestamp = 0.0;  // epoch seconds
};

enum class Blend { kMax, kMean };

/// Pixels covered by no valid tile pixel are missing.
ProbabilityMask stitch(std::span<const TileDetection> tiles, int width, int height, Blend blend = Blend::kMax);

inline constexpr double kDefaultThreshold = 0.4;

/// Percent of non-missing pixels with value >= threshold.
double coverage_fraction(const ProbabilityMask& prob, double threshold = kDefaultThreshold);

double local_hour(double utc_hour, double lon_deg);

/// Centred mean over the days present within +-window/2; missing days are
/// skipped and edges use whatever part of the window exists.
std::map<int, double> rolling_mean(const std::map<int, double>& series, int window = 15);

/// Low-accuracy solar position (mean elements plus equation of centre),
/// degrees.
double solar_zenith(double lat_deg, double lon_deg, double epoch_s);
inline bool is_night(double zenith_deg) { return zenith_deg > 90.0; }

/// Fraction of valid pixels whose code differs from `clear_code`.
double cloud_cover_fraction(const Grid<std::uint8_t>& phase, std::uint8_t clear_code = 0);

// ---- stratified evaluation ----

enum class Stratum { kZenith, kCloud, kGridbox, kHour, kDayOfYear };
Stratum parse_stratum(const std::string& name);
std::string stratum_name(Stratum s);

struct ExampleMeta {
  double lat = 0.0, lon = 0.0;
  double timestamp = 0.0;
  double cloud_fraction = 0.0;
};

struct EvalExample {
  ProbabilityMask pred;
  BinaryMask gt;
  ExampleMeta meta;
};

struct StratumRow {
  std::string key;
  std::int64_t tp = 0, fp = 0, fn = 0;
  double precision = 1.0, recall = 1.0;
  bool degenerate = false;  // no ground-truth positives
  std::int64_t n = 0;       // examples
};

struct StratifyParams {
  double threshold = kDefaultThreshold;
  double zenith_bin_deg = 10.0;
  double cloud_bin = 0.1;
  double gridbox_deg = 10.0;
};

/// Bucket label of an example under a stratification.
std::string stratum_key(const ExampleMeta& m, Stratum s, const StratifyParams& p = {});

/// Pooled pixel precision/recall per bucket, rows sorted by key.
std::vector<StratumRow> stratified_report(std::span<const EvalExample> examples, Stratum s,
                                          const StratifyParams& p = {});

/// Batch report over a detections directory holding index.csv with header
/// file,time_iso8601,lat,lon and optional gt_file, cloud_fraction and
/// waypoints columns; files are rasters in the sidecar format. hour and doy
/// give key,coverage_pct,waypoints,n; zenith, cloud and gridbox need gt_file
/// and give key,precision,recall,tp,fp,fn,n.
std::string coverage_report_csv(const std::filesystem::path& dir, double threshold, Stratum by);

}  // namespace ck::coverage
