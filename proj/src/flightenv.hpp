#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"
#include "utm.hpp"

namespace ck::flightenv {

inline constexpr double kMetersPerDegree = 111320.0;

/// Gridded horizontal wind, u east / v north in m/s, stored [time][level][lat][lon].
class WindField {
 public:
  WindField() = default;
  WindField(std::vector<double> lats, std::vector<double> lons, std::vector<double> levels_hpa,
            std::vector<std::int64_t> times);

  std::size_t n_lat() const { return lats_.size(); }
  std::size_t n_lon() const { return lons_.size(); }
  std::size_t n_levels() const { return levels_.size(); }
  std::size_t n_times() const { return times_.size(); }
  const std::vector<double>& lats() const { return lats_; }
  const std::vector<double>& lons() const { return lons_; }
  const std::vector<double>& levels_hpa() const { return levels_; }
  const std::vector<std::int64_t>& times() const { return times_; }

  std::size_t offset(std::size_t t, std::size_t l, std::size_t la, std::size_t lo) const {
    return ((t * n_levels() + l) * n_lat() + la) * n_lon() + lo;
  }
  std::vector<float>& u() { return u_; }
  std::vector<float>& v() { return v_; }
  const std::vector<float>& u() const { return u_; }
  const std::vector<float>& v() const { return v_; }

  /// Checks axis monotonicity and the speed bound.
  void validate() const;

  /// Index of the level nearest in pressure.
  std::size_t nearest_level(double pressure_hpa) const;

  struct Sample {
    double u = 0.0, v = 0.0;
  };
  /// Bilinear in lat/lon, linear in time; nullopt outside the domain.
  std::optional<Sample> at(double time_s, std::size_t level, double lat, double lon) const;

 private:
  std::vector<double> lats_, lons_, levels_;
  std::vector<std::int64_t> times_;
  std::vector<float> u_, v_;
};

/// ICAO standard atmosphere (troposphere + lower stratosphere).
double isa_pressure_hpa(double altitude_m);
double isa_altitude_m(double pressure_hpa);

struct Waypoint {
  double time = 0.0;  // epoch seconds
  double lat = 0.0, lon = 0.0;
  double altitude_m = 0.0;
};

struct FlightTrack {
  std::string flight_id;
  std::vector<Waypoint> waypoints;

  void validate() const;
};

struct TrackPoint {
  double time = 0.0;
  double lat = 0.0, lon = 0.0;
  double age_s = 0.0;
};

struct AdvectedTrack {
  std::string flight_id;
  std::size_t source_waypoint = 0;
  std::vector<TrackPoint> trajectory;
  bool exited_domain = false;

  /// Position at `time`, linearly interpolated; nullopt outside the span.
  std::optional<TrackPoint> at(double time) const;
};

/// Fixed-step Bogacki-Shampine third-order integration of
/// d(lat, lon)/dt = (v / 111320, u / (111320 cos lat)) in degrees/s.
AdvectedTrack advect(const Waypoint& start, const WindField& wind, double duration_s,
                     double step_s = 60.0);

std::vector<AdvectedTrack> advect_flights(std::span<const FlightTrack> flights, const WindField& wind,
                                          double duration_s = 4.0 * 3600.0, double step_s = 60.0);

// ---- humidity ----

enum class IceSaturation { kMurphyKoop, kSonntag };

/// Saturation vapour pressure over ice, Pa.
double saturation_vapor_pressure_ice(double temperature_k, IceSaturation f = IceSaturation::kMurphyKoop);

/// Vapour pressure (Pa) from specific humidity and pressure (Pa).
double vapor_pressure(double q, double pressure_pa);

struct AtmosLevel {
  double temperature_k = 0.0;
  double pressure_hpa = 0.0;
  double specific_humidity = 0.0;  // kg/kg
};

struct AtmosColumn {
  std::vector<AtmosLevel> levels;
};

inline constexpr double kMinIceFormulaT = 110.0;

/// RHi in percent per level; nullopt for levels outside formula validity.
std::vector<std::optional<double>> relative_humidity_ice(const AtmosColumn& col,
                                                         IceSaturation f = IceSaturation::kMurphyKoop);

/// Maximum RHi over levels whose standard-atmosphere altitude lies in
/// [lo_m, hi_m]; 0 if none qualify.
double max_rhi_in_band(const AtmosColumn& col, double lo_m = 7000.0, double hi_m = 12000.0,
                       IceSaturation f = IceSaturation::kMurphyKoop);

// ---- density ----

struct DensityPoint {
  double lat = 0.0, lon = 0.0;
  double age_s = 0.0;
};

/// Positions of every track at `time` with their ages.
std::vector<DensityPoint> positions_at(std::span<const AdvectedTrack> tracks, double time);

struct DensityParams {
  double sigma0_px = 1.0;
  double growth_px_per_s = 1.0 / 3600.0;
  double truncate_sigmas = 5.0;
};

/// Sum of normalised isotropic Gaussians (sigma = sigma0 + k * age) at pixel
/// centres of the patch.
Grid<double> render_density(std::span<const DensityPoint> pts, const utm::Patch& patch,
                            const DensityParams& params = {});

/// Distinct flights with at least one trajectory point inside the patch.
std::size_t count_tracks_in_patch(std::span<const AdvectedTrack> tracks, const utm::Patch& patch);

// ---- file formats ----

/// "WND1" file: the raster sidecar header (width = n_lon, height = n_lat,
/// channel id, corner lat/lon) followed by u32 n_levels, u32 n_times, f64
/// lat[n_lat], f64 lon[n_lon], f64 level_hpa[n_levels], i64 time[n_times],
/// then f32 u and f32 v in [time][level][lat][lon] order. Little-endian.
void write_wind(std::ostream& out, const WindField& w);
WindField read_wind(std::istream& in);

/// CSV with header flight_id,time_iso8601,lat,lon,alt_m.
std::vector<FlightTrack> read_tracks_csv(std::istream& in);

/// "YYYY-MM-DDTHH:MM:SS[.fff][Z]" in UTC -> epoch seconds.
double parse_iso8601(const std::string& s);
std::string format_iso8601(std::int64_t epoch_s);

}  // namespace ck::flightenv
