#include "coverage.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "flightenv.hpp"
#include "raster_io.hpp"
#include "timeutil.hpp"

namespace ck::coverage {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double wrap(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0) r += period;
  return r >= period ? 0.0 : r;
}

std::string bin_label(double x, double width) {
  const double lo = std::floor(x / width) * width;
  char buf[64];
  std::snprintf(buf, sizeof buf, "[%g,%g)", lo, lo + width);
  return buf;
}

}  // namespace

ProbabilityMask stitch(std::span<const TileDetection> tiles, int width, int height, Blend blend) {
  ProbabilityMask out(width, height, 0.0f);
  std::vector<std::uint32_t> hits(out.size(), 0);
  std::vector<double> sum(out.size(), 0.0);
  for (const auto& t : tiles) {
    for (int r = 0; r < t.prob.height(); ++r)
      for (int c = 0; c < t.prob.width(); ++c) {
        const int mr = r + t.row0, mc = c + t.col0;
        if (!out.contains(mr, mc) || t.prob.missing(r, c)) continue;
        const std::size_t i = out.index(mr, mc);
        const float v = t.prob.at(r, c);
        out[i] = hits[i] == 0 ? v : std::max(out[i], v);
        sum[i] += v;
        ++hits[i];
      }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (hits[i] == 0) {
      out.set_missing(i);
    } else if (blend == Blend::kMean) {
      out[i] = static_cast<float>(sum[i] / hits[i]);
    }
  }
  return out;
}

double coverage_fraction(const ProbabilityMask& prob, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, "coverage: threshold must be in [0, 1]");
  std::size_t valid = 0, hit = 0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    if (prob.missing(i)) continue;
    ++valid;
    hit += reaches(prob[i], threshold);
  }
  if (valid == 0) throw Error(ErrorCode::kUndefined, "coverage: every pixel is missing");
  return 100.0 * static_cast<double>(hit) / static_cast<double>(valid);
}

double local_hour(double utc_hour, double lon_deg) { return wrap(utc_hour + lon_deg / 360.0 * 24.0, 24.0); }

std::map<int, double> rolling_mean(const std::map<int, double>& series, int window) {
  if (window < 1 || window % 2 == 0)
    throw Error(ErrorCode::kInvalidArgument, "rolling_mean: window must be odd and >= 1");
  const int half = window / 2;
  std::map<int, double> out;
  for (const auto& [day, _] : series) {
    double s = 0.0;
    int n = 0;
    for (auto it = series.lower_bound(day - half); it != series.end() && it->first <= day + half; ++it) {
      s += it->second;
      ++n;
    }
    out[day] = s / n;
  }
  return out;
}

double solar_zenith(double lat_deg, double lon_deg, double epoch_s) {
  const double n = epoch_s / 86400.0 - 10957.5;  // days since J2000.0
  const double L = wrap(280.460 + 0.9856474 * n, 360.0);
  const double g = wrap(357.528 + 0.9856003 * n, 360.0) * kDeg;
  const double lambda = (L + 1.915 * std::sin(g) + 0.020 * std::sin(2 * g)) * kDeg;
  const double eps = (23.439 - 0.0000004 * n) * kDeg;
  const double ra = std::atan2(std::cos(eps) * std::sin(lambda), std::cos(lambda));
  const double decl = std::asin(std::sin(eps) * std::sin(lambda));
  const double gmst_deg = wrap(280.46061837 + 360.98564736629 * n, 360.0);
  const double h = gmst_deg * kDeg + lon_deg * kDeg - ra;
  const double phi = lat_deg * kDeg;
  const double cz = std::sin(phi) * std::sin(decl) + std::cos(phi) * std::cos(decl) * std::cos(h);
  return std::acos(std::clamp(cz, -1.0, 1.0)) / kDeg;
}

double cloud_cover_fraction(const Grid<std::uint8_t>& phase, std::uint8_t clear_code) {
  std::size_t valid = 0, cloudy = 0;
  for (std::size_t i = 0; i < phase.size(); ++i) {
    if (phase.missing(i)) continue;
    ++valid;
    cloudy += phase[i] != clear_code;
  }
  if (valid == 0) throw Error(ErrorCode::kUndefined, "cloud cover: every pixel is invalid");
  return static_cast<double>(cloudy) / static_cast<double>(valid);
}

Stratum parse_stratum(const std::string& name) {
  if (name == "zenith") return Stratum::kZenith;
  if (name == "cloud") return Stratum::kCloud;
  if (name == "gridbox") return Stratum::kGridbox;
  if (name == "hour") return Stratum::kHour;
  if (name == "doy") return Stratum::kDayOfYear;
  throw Error(ErrorCode::kInvalidArgument, "unknown stratum: " + name);
}

std::string stratum_name(Stratum s) {
  switch (s) {
    case Stratum::kZenith: return "zenith";
    case Stratum::kCloud: return "cloud";
    case Stratum::kGridbox: return "gridbox";
    case Stratum::kHour: return "hour";
    case Stratum::kDayOfYear: return "doy";
  }
  return "?";
}

std::string stratum_key(const ExampleMeta& m, Stratum s, const StratifyParams& p) {
  switch (s) {
    case Stratum::kZenith:
      return bin_label(solar_zenith(m.lat, m.lon, m.timestamp), p.zenith_bin_deg);
    case Stratum::kCloud:
      if (!(m.cloud_fraction >= 0.0 && m.cloud_fraction <= 1.0))
        throw Error(ErrorCode::kInvalidArgument, "cloud fraction outside [0, 1]");
      // A fully cloudy scene goes in the top bucket rather than its own.
      return bin_label(std::min(m.cloud_fraction, 1.0 - 1e-12), p.cloud_bin);
    case Stratum::kGridbox:
      return bin_label(m.lat, p.gridbox_deg) + "x" + bin_label(m.lon, p.gridbox_deg);
    case Stratum::kHour: {
      const double utc = wrap(m.timestamp, 86400.0) / 3600.0;
      return std::to_string(static_cast<int>(std::floor(local_hour(utc, m.lon))));
    }
    case Stratum::kDayOfYear: {
      const auto days = static_cast<std::int64_t>(std::floor(m.timestamp / 86400.0));
      const std::int64_t doy = days - days_from_civil(civil_from_days(days).year, 1, 1) + 1;
      return std::to_string(doy);
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown stratum");
}

std::vector<StratumRow> stratified_report(std::span<const EvalExample> examples, Stratum s,
                                          const StratifyParams& p) {
  if (!(p.threshold >= 0.0 && p.threshold <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, "stratified_report: threshold must be in [0, 1]");
  std::map<std::string, StratumRow> rows;
  for (const auto& ex : examples) {
    require_same_shape(ex.pred, ex.gt, "stratified_report");
    auto& row = rows[stratum_key(ex.meta, s, p)];
    ++row.n;
    for (std::size_t i = 0; i < ex.gt.size(); ++i) {
      const bool pos = !ex.pred.missing(i) && reaches(ex.pred[i], p.threshold);
      const bool truth = ex.gt[i] != 0;
      row.tp += pos && truth;
      row.fp += pos && !truth;
      row.fn += !pos && truth;
    }
  }
  std::vector<StratumRow> out;
  for (auto& [key, row] : rows) {
    row.key = key;
    row.precision = row.tp + row.fp > 0 ? static_cast<double>(row.tp) / static_cast<double>(row.tp + row.fp) : 1.0;
    row.degenerate = row.tp + row.fn == 0;
    row.recall = row.degenerate ? 1.0 : static_cast<double>(row.tp) / static_cast<double>(row.tp + row.fn);
    out.push_back(row);
  }
  return out;
}

namespace {

struct IndexRow {
  std::string file, gt_file;
  ExampleMeta meta;
  double waypoints = 0.0;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cols;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cols.push_back(cell);
  if (!line.empty() && line.back() == ',') cols.emplace_back();
  return cols;
}

std::vector<IndexRow> read_index(const std::filesystem::path& dir) {
  std::istringstream in(io::read_file(dir / "index.csv"));
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kInvalidArgument, "index.csv is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* req : {"file", "time_iso8601", "lat", "lon"})
    if (!col.contains(req)) throw Error(ErrorCode::kInvalidArgument, std::string("index.csv lacks column ") + req);
  std::vector<IndexRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw Error(ErrorCode::kInvalidArgument, "index.csv line " + std::to_string(lineno) + ": wrong column count");
    IndexRow r;
    try {
      r.file = cells[col["file"]];
      r.meta.timestamp = flightenv::parse_iso8601(cells[col["time_iso8601"]]);
      r.meta.lat = std::stod(cells[col["lat"]]);
      r.meta.lon = std::stod(cells[col["lon"]]);
      if (col.contains("gt_file")) r.gt_file = cells[col["gt_file"]];
      if (col.contains("cloud_fraction") && !cells[col["cloud_fraction"]].empty())
        r.meta.cloud_fraction = std::stod(cells[col["cloud_fraction"]]);
      if (col.contains("waypoints") && !cells[col["waypoints"]].empty())
        r.waypoints = std::stod(cells[col["waypoints"]]);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument, "index.csv line " + std::to_string(lineno) + ": bad number");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

std::string coverage_report_csv(const std::filesystem::path& dir, double threshold, Stratum by) {
  const auto rows = read_index(dir);
  std::ostringstream out;
  out.precision(10);
  if (by == Stratum::kHour || by == Stratum::kDayOfYear) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
      throw Error(ErrorCode::kInvalidArgument, "coverage: threshold must be in [0, 1]");
    struct Acc {
      std::int64_t hit = 0, valid = 0, n = 0;
      double waypoints = 0.0;
    };
    std::map<int, Acc> acc;
    for (const auto& r : rows) {
      const auto prob = io::load_raster(dir / r.file).grid;
      auto& a = acc[std::stoi(stratum_key(r.meta, by))];
      for (std::size_t i = 0; i < prob.size(); ++i) {
        if (prob.missing(i)) continue;
        ++a.valid;
        a.hit += reaches(prob[i], threshold);
      }
      a.waypoints += r.waypoints;
      ++a.n;
    }
    out << "key,coverage_pct,waypoints,n\n";
    for (const auto& [key, a] : acc) {
      out << key << ',';
      if (a.valid > 0) out << 100.0 * static_cast<double>(a.hit) / static_cast<double>(a.valid);
      out << ',' << a.waypoints << ',' << a.n << '\n';
    }
    return out.str();
  }
  std::vector<EvalExample> examples;
  for (const auto& r : rows) {
    if (r.gt_file.empty())
      throw Error(ErrorCode::kInvalidArgument, "stratum " + stratum_name(by) + " needs a gt_file for " + r.file);
    examples.push_back({io::load_raster(dir / r.file).grid, io::to_mask(io::load_raster(dir / r.gt_file)), r.meta});
  }
  StratifyParams p;
  p.threshold = threshold;
  out << "key,precision,recall,tp,fp,fn,n\n";
  for (const auto& row : stratified_report(examples, by, p)) {
    out << '"' << row.key << "\"," << row.precision << ',';
    if (!row.degenerate) out << row.recall;
    out << ',' << row.tp << ',' << row.fp << ',' << row.fn << ',' << row.n << '\n';
  }
  return out.str();
}

}  // namespace ck::coverage
