#include "flightenv.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "timeutil.hpp"

namespace ck::flightenv {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

bool strictly_monotone(const std::vector<double>& a) {
  if (a.size() < 2) return true;
  const bool inc = a[1] > a[0];
  for (std::size_t i = 1; i < a.size(); ++i)
    if (inc ? !(a[i] > a[i - 1]) : !(a[i] < a[i - 1])) return false;
  return true;
}

// Cell index i and weight w with x between axis[i] and axis[i+1]; works for
// ascending and descending axes. nullopt outside.
std::optional<std::pair<std::size_t, double>> locate(const std::vector<double>& axis, double x) {
  if (axis.size() == 1) {
    if (x == axis[0]) return std::pair<std::size_t, double>{0, 0.0};
    return std::nullopt;
  }
  const bool inc = axis.back() > axis.front();
  const double lo = inc ? axis.front() : axis.back();
  const double hi = inc ? axis.back() : axis.front();
  if (!(x >= lo && x <= hi)) return std::nullopt;
  std::size_t i;
  if (inc) {
    i = static_cast<std::size_t>(std::upper_bound(axis.begin(), axis.end(), x) - axis.begin());
  } else {
    i = static_cast<std::size_t>(
        std::upper_bound(axis.begin(), axis.end(), x, std::greater<double>()) - axis.begin());
  }
  i = std::min(std::max<std::size_t>(i, 1), axis.size() - 1) - 1;
  const double w = (x - axis[i]) / (axis[i + 1] - axis[i]);
  return std::pair<std::size_t, double>{i, w};
}

}  // namespace

WindField::WindField(std::vector<double> lats, std::vector<double> lons, std::vector<double> levels_hpa,
                     std::vector<std::int64_t> times)
    : lats_(std::move(lats)), lons_(std::move(lons)), levels_(std::move(levels_hpa)), times_(std::move(times)) {
  if (lats_.empty() || lons_.empty() || levels_.empty() || times_.empty())
    throw Error(ErrorCode::kInvalidArgument, "wind field axes must be non-empty");
  const std::size_t n = lats_.size() * lons_.size() * levels_.size() * times_.size();
  u_.assign(n, 0.0f);
  v_.assign(n, 0.0f);
}

void WindField::validate() const {
  if (!strictly_monotone(lats_) || !strictly_monotone(lons_) || !strictly_monotone(levels_))
    throw Error(ErrorCode::kInvalidArgument, "wind field: axes must be strictly monotone");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (times_[i] <= times_[i - 1])
      throw Error(ErrorCode::kInvalidArgument, "wind field: times must be strictly increasing");
  for (std::size_t i = 0; i < u_.size(); ++i)
    if (!std::isfinite(u_[i]) || !std::isfinite(v_[i]) || std::hypot(u_[i], v_[i]) >= 200.0)
      throw Error(ErrorCode::kInvalidArgument, "wind field: speeds must be finite and < 200 m/s");
}

std::size_t WindField::nearest_level(double pressure_hpa) const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < levels_.size(); ++i)
    if (std::fabs(levels_[i] - pressure_hpa) < std::fabs(levels_[best] - pressure_hpa)) best = i;
  return best;
}

std::optional<WindField::Sample> WindField::at(double time_s, std::size_t level, double lat, double lon) const {
  const auto la = locate(lats_, lat);
  const auto lo = locate(lons_, lon);
  if (!la || !lo || level >= levels_.size()) return std::nullopt;

  std::size_t t0 = 0;
  double wt = 0.0;
  if (times_.size() == 1) {
    if (time_s != static_cast<double>(times_[0])) return std::nullopt;
  } else {
    std::vector<double> tt(times_.begin(), times_.end());
    const auto tl = locate(tt, time_s);
    if (!tl) return std::nullopt;
    t0 = tl->first;
    wt = tl->second;
  }
  const auto [i, wi] = *la;
  const auto [j, wj] = *lo;
  const std::size_t i1 = std::min(i + 1, n_lat() - 1), j1 = std::min(j + 1, n_lon() - 1);
  auto bilinear = [&](const std::vector<float>& f, std::size_t t) {
    const double a = f[offset(t, level, i, j)], b = f[offset(t, level, i, j1)];
    const double c = f[offset(t, level, i1, j)], d = f[offset(t, level, i1, j1)];
    return (1 - wi) * ((1 - wj) * a + wj * b) + wi * ((1 - wj) * c + wj * d);
  };
  Sample s{bilinear(u_, t0), bilinear(v_, t0)};
  if (wt > 0.0) {
    const std::size_t t1 = t0 + 1;
    s.u = (1 - wt) * s.u + wt * bilinear(u_, t1);
    s.v = (1 - wt) * s.v + wt * bilinear(v_, t1);
  }
  return s;
}

double isa_pressure_hpa(double h) {
  if (h <= 11000.0) return 1013.25 * std::pow(1.0 - 0.0065 * h / 288.15, 5.25588);
  return 226.32 * std::exp(-(h - 11000.0) / 6341.62);
}

double isa_altitude_m(double p) {
  if (p >= 226.32) return 288.15 / 0.0065 * (1.0 - std::pow(p / 1013.25, 1.0 / 5.25588));
  return 11000.0 - 6341.62 * std::log(p / 226.32);
}

void FlightTrack::validate() const {
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    const auto& w = waypoints[i];
    if (i > 0 && !(w.time > waypoints[i - 1].time))
      throw Error(ErrorCode::kInvalidArgument, "flight " + flight_id + ": times must be strictly increasing");
    if (!(w.altitude_m >= 0.0 && w.altitude_m <= 20000.0))
      throw Error(ErrorCode::kInvalidArgument, "flight " + flight_id + ": altitude outside [0, 20000] m");
  }
}

std::optional<TrackPoint> AdvectedTrack::at(double time) const {
  if (trajectory.empty() || time < trajectory.front().time || time > trajectory.back().time)
    return std::nullopt;
  auto it = std::lower_bound(trajectory.begin(), trajectory.end(), time,
                             [](const TrackPoint& p, double t) { return p.time < t; });
  if (it->time == time) return *it;
  const TrackPoint& b = *it;
  const TrackPoint& a = *(it - 1);
  const double w = (time - a.time) / (b.time - a.time);
  return TrackPoint{time, a.lat + w * (b.lat - a.lat), a.lon + w * (b.lon - a.lon), time - trajectory.front().time};
}

AdvectedTrack advect(const Waypoint& start, const WindField& wind, double duration_s, double step_s) {
  if (!(duration_s > 0.0) || !(step_s > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "advect: duration and step must be positive");
  const std::size_t level = wind.nearest_level(isa_pressure_hpa(start.altitude_m));

  struct Rate {
    double dlat, dlon;
  };
  auto rate = [&](double t, double lat, double lon) -> std::optional<Rate> {
    const auto s = wind.at(t, level, lat, lon);
    if (!s) return std::nullopt;
    return Rate{s->v / kMetersPerDegree, s->u / (kMetersPerDegree * std::cos(lat * kDeg))};
  };

  AdvectedTrack out;
  out.trajectory.push_back({start.time, start.lat, start.lon, 0.0});
  double t = start.time, lat = start.lat, lon = start.lon;
  const auto full = static_cast<long long>(std::floor(duration_s / step_s + 1e-9));
  const double rest = duration_s - static_cast<double>(full) * step_s;
  const long long n_steps = full + (rest > 1e-9 * step_s ? 1 : 0);
  for (long long n = 0; n < n_steps; ++n) {
    const double h = n < full ? step_s : rest;
    const auto k1 = rate(t, lat, lon);
    if (!k1) { out.exited_domain = true; break; }
    const auto k2 = rate(t + 0.5 * h, lat + 0.5 * h * k1->dlat, lon + 0.5 * h * k1->dlon);
    if (!k2) { out.exited_domain = true; break; }
    const auto k3 = rate(t + 0.75 * h, lat + 0.75 * h * k2->dlat, lon + 0.75 * h * k2->dlon);
    if (!k3) { out.exited_domain = true; break; }
    lat += h * (2.0 / 9.0 * k1->dlat + 1.0 / 3.0 * k2->dlat + 4.0 / 9.0 * k3->dlat);
    lon += h * (2.0 / 9.0 * k1->dlon + 1.0 / 3.0 * k2->dlon + 4.0 / 9.0 * k3->dlon);
    t = start.time + (n < full ? static_cast<double>(n + 1) * step_s : duration_s);
    out.trajectory.push_back({t, lat, lon, t - start.time});
  }
  return out;
}

std::vector<AdvectedTrack> advect_flights(std::span<const FlightTrack> flights, const WindField& wind,
                                          double duration_s, double step_s) {
  std::vector<AdvectedTrack> out;
  for (const auto& f : flights) {
    f.validate();
    for (std::size_t i = 0; i < f.waypoints.size(); ++i) {
      AdvectedTrack a = advect(f.waypoints[i], wind, duration_s, step_s);
      a.flight_id = f.flight_id;
      a.source_waypoint = i;
      out.push_back(std::move(a));
    }
  }
  return out;
}

double saturation_vapor_pressure_ice(double t, IceSaturation f) {
  if (!(t >= kMinIceFormulaT))
    throw Error(ErrorCode::kInvalidArgument, "ice saturation formula invalid below 110 K");
  if (f == IceSaturation::kMurphyKoop)
    return std::exp(9.550426 - 5723.265 / t + 3.53068 * std::log(t) - 0.00728332 * t);
  // Sonntag (1990), hPa -> Pa.
  return 100.0 * std::exp(-6024.5282 / t + 24.7219 + 1.0613868e-2 * t - 1.3198825e-5 * t * t -
                          0.49382577 * std::log(t));
}

double vapor_pressure(double q, double pressure_pa) {
  constexpr double eps = 0.622;
  return q * pressure_pa / (eps + (1.0 - eps) * q);
}

std::vector<std::optional<double>> relative_humidity_ice(const AtmosColumn& col, IceSaturation f) {
  std::vector<std::optional<double>> out;
  out.reserve(col.levels.size());
  for (const auto& l : col.levels) {
    if (!(l.temperature_k >= kMinIceFormulaT) || !(l.pressure_hpa > 0.0) || !(l.specific_humidity >= 0.0)) {
      out.emplace_back(std::nullopt);
      continue;
    }
    const double e = vapor_pressure(l.specific_humidity, 100.0 * l.pressure_hpa);
    out.emplace_back(100.0 * e / saturation_vapor_pressure_ice(l.temperature_k, f));
  }
  return out;
}

double max_rhi_in_band(const AtmosColumn& col, double lo_m, double hi_m, IceSaturation f) {
  const auto rhi = relative_humidity_ice(col, f);
  double best = 0.0;
  for (std::size_t i = 0; i < rhi.size(); ++i) {
    const double z = isa_altitude_m(col.levels[i].pressure_hpa);
    if (z >= lo_m && z <= hi_m && rhi[i]) best = std::max(best, *rhi[i]);
  }
  return best;
}

std::vector<DensityPoint> positions_at(std::span<const AdvectedTrack> tracks, double time) {
  std::vector<DensityPoint> out;
  for (const auto& t : tracks)
    if (const auto p = t.at(time)) out.push_back({p->lat, p->lon, p->age_s});
  return out;
}

Grid<double> render_density(std::span<const DensityPoint> pts, const utm::Patch& patch,
                            const DensityParams& params) {
  if (!(params.sigma0_px > 0.0) || params.growth_px_per_s < 0.0)
    throw Error(ErrorCode::kInvalidArgument, "density: sigma0 must be > 0 and growth >= 0");
  Grid<double> out(patch.width, patch.height, 0.0);
  for (const auto& p : pts) {
    const auto [pr, pc] = patch.to_pixel({p.lat, p.lon});
    const double sigma = params.sigma0_px + params.growth_px_per_s * p.age_s;
    const double radius = params.truncate_sigmas * sigma;
    const double norm = 1.0 / (2.0 * std::numbers::pi * sigma * sigma);
    const int r0 = std::max(0, static_cast<int>(std::floor(pr - radius)));
    const int r1 = std::min(patch.height - 1, static_cast<int>(std::ceil(pr + radius)));
    const int c0 = std::max(0, static_cast<int>(std::floor(pc - radius)));
    const int c1 = std::min(patch.width - 1, static_cast<int>(std::ceil(pc + radius)));
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) {
        const double d2 = (r - pr) * (r - pr) + (c - pc) * (c - pc);
        if (d2 <= radius * radius) out.at(r, c) += norm * std::exp(-0.5 * d2 / (sigma * sigma));
      }
  }
  return out;
}

std::size_t count_tracks_in_patch(std::span<const AdvectedTrack> tracks, const utm::Patch& patch) {
  std::set<std::string> inside;
  for (const auto& t : tracks) {
    if (inside.contains(t.flight_id)) continue;
    for (const auto& p : t.trajectory)
      if (patch.contains({p.lat, p.lon})) {
        inside.insert(t.flight_id);
        break;
      }
  }
  return inside.size();
}

// ---- file formats ----

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.write(b, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  char b[sizeof(T)];
  in.read(b, sizeof(T));
  if (in.gcount() != sizeof(T)) throw Error(ErrorCode::kTruncated, "wind file truncated");
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

void write_wind(std::ostream& out, const WindField& w) {
  out.write("WND1", 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(w.n_lon()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(w.n_lat()));
  put<std::uint32_t>(out, 0);
  put<double>(out, w.lats().front());
  put<double>(out, w.lons().front());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(w.n_levels()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(w.n_times()));
  for (double x : w.lats()) put<double>(out, x);
  for (double x : w.lons()) put<double>(out, x);
  for (double x : w.levels_hpa()) put<double>(out, x);
  for (auto x : w.times()) put<std::int64_t>(out, x);
  for (float x : w.u()) put<float>(out, x);
  for (float x : w.v()) put<float>(out, x);
  if (!out) throw Error(ErrorCode::kIo, "write_wind: stream write failed");
}

WindField read_wind(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "WND1", 4) != 0)
    throw Error(ErrorCode::kInvalidArgument, "wind file: bad magic");
  const auto n_lon = get<std::uint32_t>(in);
  const auto n_lat = get<std::uint32_t>(in);
  (void)get<std::uint32_t>(in);
  (void)get<double>(in);
  (void)get<double>(in);
  const auto n_lev = get<std::uint32_t>(in);
  const auto n_t = get<std::uint32_t>(in);
  const std::uint64_t total = std::uint64_t{n_lon} * n_lat * n_lev * n_t;
  if (total == 0 || total > (1ull << 31)) throw Error(ErrorCode::kInvalidArgument, "wind file: bad dimensions");
  std::vector<double> lats(n_lat), lons(n_lon), levels(n_lev);
  std::vector<std::int64_t> times(n_t);
  for (auto& x : lats) x = get<double>(in);
  for (auto& x : lons) x = get<double>(in);
  for (auto& x : levels) x = get<double>(in);
  for (auto& x : times) x = get<std::int64_t>(in);
  WindField w(std::move(lats), std::move(lons), std::move(levels), std::move(times));
  for (auto& x : w.u()) x = get<float>(in);
  for (auto& x : w.v()) x = get<float>(in);
  w.validate();
  return w;
}

double parse_iso8601(const std::string& s) {
  int y, mo, d, h, mi;
  double sec;
  char tail[8] = {0};
  const int n = std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%lf%7s", &y, &mo, &d, &h, &mi, &sec, tail);
  if (n < 6 || (n == 7 && std::strcmp(tail, "Z") != 0 && std::strcmp(tail, "+00:00") != 0) ||
      mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec >= 61)
    throw Error(ErrorCode::kInvalidArgument, "bad ISO-8601 UTC timestamp: " + s);
  return static_cast<double>(days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
                             h * 3600 + mi * 60) +
         sec;
}

std::string format_iso8601(std::int64_t epoch_s) {
  const std::int64_t days = floor_div(epoch_s, 86400);
  const std::int64_t rem = epoch_s - days * 86400;
  const CivilDate cd = civil_from_days(days);
  const auto y = cd.year;
  const auto m = cd.month, d = cd.day;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<long long>(y), m, d,
                static_cast<long long>(rem / 3600), static_cast<long long>(rem % 3600 / 60),
                static_cast<long long>(rem % 60));
  return buf;
}

std::vector<FlightTrack> read_tracks_csv(std::istream& in) {
  std::map<std::string, FlightTrack> by_id;
  std::vector<std::string> order;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("flight_id", 0) == 0) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() != 5)
      throw Error(ErrorCode::kInvalidArgument, "tracks CSV line " + std::to_string(lineno) + ": expected 5 columns");
    Waypoint w;
    try {
      w.time = parse_iso8601(cols[1]);
      w.lat = std::stod(cols[2]);
      w.lon = std::stod(cols[3]);
      w.altitude_m = std::stod(cols[4]);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument, "tracks CSV line " + std::to_string(lineno) + ": bad number");
    }
    auto [it, fresh] = by_id.try_emplace(cols[0]);
    if (fresh) {
      it->second.flight_id = cols[0];
      order.push_back(cols[0]);
    }
    it->second.waypoints.push_back(w);
  }
  std::vector<FlightTrack> out;
  for (const auto& id : order) {
    by_id[id].validate();
    out.push_back(std::move(by_id[id]));
  }
  return out;
}

}  // namespace ck::flightenv
