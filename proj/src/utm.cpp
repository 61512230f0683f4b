#include "utm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace ck::utm {
namespace {

constexpr double kA = 6378137.0;
constexpr double kF = 1.0 / 298.257223563;
constexpr double kK0 = 0.9996;
constexpr double kFalseEasting = 500000.0;
constexpr double kFalseNorthingSouth = 10000000.0;
constexpr double kDeg = std::numbers::pi / 180.0;

struct Series {
  double n, big_a;
  std::array<double, 3> alpha, beta, delta;
};

const Series& series() {
  static const Series s = [] {
    const double n = kF / (2.0 - kF);
    const double n2 = n * n, n3 = n2 * n;
    Series out{};
    out.n = n;
    out.big_a = kA / (1.0 + n) * (1.0 + n2 / 4.0 + n2 * n2 / 64.0);
    out.alpha = {n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0, 13.0 * n2 / 48.0 - 3.0 * n3 / 5.0,
                 61.0 * n3 / 240.0};
    out.beta = {n / 2.0 - 2.0 * n2 / 3.0 + 37.0 * n3 / 96.0, n2 / 48.0 + n3 / 15.0,
                17.0 * n3 / 480.0};
    out.delta = {2.0 * n - 2.0 * n2 / 3.0 - 2.0 * n3, 7.0 * n2 / 3.0 - 8.0 * n3 / 5.0,
                 56.0 * n3 / 15.0};
    return out;
  }();
  return s;
}

double central_meridian(int zone) { return (zone - 1) * 6.0 - 180.0 + 3.0; }

}  // namespace

int zone_for_lon(double lon_deg) {
  const int z = static_cast<int>(std::floor((lon_deg + 180.0) / 6.0)) + 1;
  return std::clamp(z, 1, 60);
}

Projected forward(LatLon p, int zone, bool north) {
  const Series& s = series();
  const double phi = p.lat * kDeg;
  const double dlam = (p.lon - central_meridian(zone)) * kDeg;
  const double c = 2.0 * std::sqrt(s.n) / (1.0 + s.n);
  const double sphi = std::sin(phi);
  const double t = std::sinh(std::atanh(sphi) - c * std::atanh(c * sphi));
  const double xi_p = std::atan2(t, std::cos(dlam));
  const double eta_p = std::atanh(std::sin(dlam) / std::sqrt(1.0 + t * t));
  double e = eta_p, n = xi_p;
  for (int j = 1; j <= 3; ++j) {
    e += s.alpha[j - 1] * std::cos(2.0 * j * xi_p) * std::sinh(2.0 * j * eta_p);
    n += s.alpha[j - 1] * std::sin(2.0 * j * xi_p) * std::cosh(2.0 * j * eta_p);
  }
  return {kFalseEasting + kK0 * s.big_a * e,
          (north ? 0.0 : kFalseNorthingSouth) + kK0 * s.big_a * n};
}

LatLon inverse(Projected p, int zone, bool north) {
  const Series& s = series();
  const double xi = (p.northing - (north ? 0.0 : kFalseNorthingSouth)) / (kK0 * s.big_a);
  const double eta = (p.easting - kFalseEasting) / (kK0 * s.big_a);
  double xi_p = xi, eta_p = eta;
  for (int j = 1; j <= 3; ++j) {
    xi_p -= s.beta[j - 1] * std::sin(2.0 * j * xi) * std::cosh(2.0 * j * eta);
    eta_p -= s.beta[j - 1] * std::cos(2.0 * j * xi) * std::sinh(2.0 * j * eta);
  }
  const double chi = std::asin(std::sin(xi_p) / std::cosh(eta_p));
  double phi = chi;
  for (int j = 1; j <= 3; ++j) phi += s.delta[j - 1] * std::sin(2.0 * j * chi);
  const double lam = std::atan2(std::sinh(eta_p), std::cos(xi_p));
  return {phi / kDeg, central_meridian(zone) + lam / kDeg};
}

std::pair<double, double> Patch::to_pixel(LatLon p) const {
  const Projected q = forward(p, zone, north);
  return {(northing0 - q.northing) / pixel_m, (q.easting - easting0) / pixel_m};
}

LatLon Patch::to_latlon(double row, double col) const {
  return inverse({easting0 + col * pixel_m, northing0 - row * pixel_m}, zone, north);
}

bool Patch::contains(LatLon p) const {
  const auto [r, c] = to_pixel(p);
  return r >= -0.5 && c >= -0.5 && r < height - 0.5 && c < width - 0.5;
}

Patch Patch::centered(LatLon center, int size, double pixel_m) {
  if (size <= 0 || !(pixel_m > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "patch size and pixel spacing must be positive");
  const double half_m = 0.5 * size * pixel_m;
  const double nw_lat = center.lat + half_m / 111320.0;
  const double nw_lon =
      center.lon - half_m / (111320.0 * std::max(std::cos(center.lat * kDeg), 1e-6));
  Patch p;
  p.zone = zone_for_lon(nw_lon);
  p.north = nw_lat >= 0.0;
  p.pixel_m = pixel_m;
  p.width = p.height = size;
  const Projected c = forward(center, p.zone, p.north);
  const double half = 0.5 * (size - 1);
  p.easting0 = c.easting - half * pixel_m;
  p.northing0 = c.northing + half * pixel_m;
  return p;
}

ReprojectResult reproject_utm(const BTGrid& src, LatLon center, int out_size, double pixel_m) {
  return reproject_utm(src, Patch::centered(center, out_size, pixel_m));
}

ReprojectResult reproject_utm(const BTGrid& src, const Patch& patch) {
  if (!(src.geo.dlat > 0.0) || !(src.geo.dlon > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "reproject_utm: source grid has no pixel spacing");
  ReprojectResult res;
  res.patch = patch;
  res.grid.grid = Grid<float>(patch.width, patch.height);
  res.grid.channel_id = src.channel_id;
  const LatLon origin = patch.to_latlon(0.0, 0.0);
  res.grid.geo = {origin.lat, origin.lon, 0.0, 0.0};

  const Grid<float>& g = src.grid;
  std::size_t valid = 0;
  for (int r = 0; r < patch.height; ++r) {
    for (int c = 0; c < patch.width; ++c) {
      const LatLon ll = patch.to_latlon(r, c);
      const double sr = (src.geo.corner_lat - ll.lat) / src.geo.dlat;
      const double sc = (ll.lon - src.geo.corner_lon) / src.geo.dlon;
      const double fr = std::floor(sr), fc = std::floor(sc);
      int r0 = static_cast<int>(fr), c0 = static_cast<int>(fc);
      double wr = sr - fr, wc = sc - fc;
      // A sample on the last row/column is still a knot.
      if (r0 == g.height() - 1 && wr == 0.0) { --r0; wr = 1.0; }
      if (c0 == g.width() - 1 && wc == 0.0) { --c0; wc = 1.0; }
      if (!g.contains(r0, c0) || !g.contains(r0 + 1, c0 + 1) || g.missing(r0, c0) ||
          g.missing(r0 + 1, c0) || g.missing(r0, c0 + 1) || g.missing(r0 + 1, c0 + 1)) {
        res.grid.grid.set_missing(r, c);
        continue;
      }
      const double top = (1.0 - wc) * g.at(r0, c0) + wc * g.at(r0, c0 + 1);
      const double bot = (1.0 - wc) * g.at(r0 + 1, c0) + wc * g.at(r0 + 1, c0 + 1);
      res.grid.grid.at(r, c) = static_cast<float>((1.0 - wr) * top + wr * bot);
      ++valid;
    }
  }
  res.outside_source = valid == 0;
  return res;
}

}  // namespace ck::utm
