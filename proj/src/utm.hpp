#pragma once

#include "common.hpp"

namespace ck::utm {

struct Projected {
  double easting = 0.0;
  double northing = 0.0;
};

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

int zone_for_lon(double lon_deg);

// Transverse Mercator on WGS84 via the Krueger n-series (third order),
// accurate to well under a metre inside a zone. `north` selects the false
// northing; points on the other side of the equator get continuous
// (possibly negative) northings.
Projected forward(LatLon p, int zone, bool north);
LatLon inverse(Projected p, int zone, bool north);

/// A regular square-pixel grid in one UTM zone; (easting0, northing0) is the
/// centre of pixel (0,0), rows run south.
struct Patch {
  int zone = 0;
  bool north = true;
  double easting0 = 0.0;
  double northing0 = 0.0;
  double pixel_m = 2000.0;
  int width = 0;
  int height = 0;

  /// Fractional pixel coordinate (row, col) of a geographic point.
  std::pair<double, double> to_pixel(LatLon p) const;
  LatLon to_latlon(double row, double col) const;
  bool contains(LatLon p) const;

  /// Patch of `size`x`size` pixels centred at (lat, lon); the zone is taken
  /// from the north-west corner of the region.
  static Patch centered(LatLon center, int size, double pixel_m);
};

struct ReprojectResult {
  BTGrid grid;
  Patch patch;
  bool outside_source = false;  // every output pixel fell outside the source
};

/// Bilinear resampling of a regular lat/lon grid onto a UTM patch. Output
/// pixels whose four neighbours are not all valid source samples are missing.
ReprojectResult reproject_utm(const BTGrid& src, LatLon center, int out_size, double pixel_m);
ReprojectResult reproject_utm(const BTGrid& src, const Patch& patch);

}  // namespace ck::utm
