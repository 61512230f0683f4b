#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "common.hpp"

namespace ck {

/// Sub-pixel image coordinate, row first.
struct Point {
  double r = 0.0;
  double c = 0.0;

  friend Point operator+(Point a, Point b) { return {a.r + b.r, a.c + b.c}; }
  friend Point operator-(Point a, Point b) { return {a.r - b.r, a.c - b.c}; }
  friend Point operator*(double s, Point a) { return {s * a.r, s * a.c}; }
  friend bool operator==(Point, Point) = default;
};

inline double dot(Point a, Point b) { return a.r * b.r + a.c * b.c; }
inline double norm(Point a) { return std::hypot(a.r, a.c); }

struct Pixel {
  int r = 0;
  int c = 0;
  friend bool operator==(Pixel, Pixel) = default;
};

/// 8-connected components of the positive pixels, ordered by the raster-scan
/// position of their first pixel; pixels within a component are in
/// breadth-first order.
std::vector<std::vector<Pixel>> connected_components(const BinaryMask& mask);

/// Removes 8-connected components smaller than `min_px`.
BinaryMask remove_small_components(const BinaryMask& mask, std::size_t min_px);

/// Least-squares principal axis of a point set.
struct AxisFit {
  Point centroid;
  Point dir;   // unit vector along the axis
  Point perp;  // unit normal
  double rms_perp = 0.0;
  double t_min = 0.0, t_max = 0.0;  // extremal projections onto dir
  double s_min = 0.0, s_max = 0.0;  // extremal projections onto perp
};

AxisFit fit_axis(std::span<const Point> pts);
std::vector<Point> to_points(std::span<const Pixel> px);

/// Undirected line angle in degrees, [0, 180). 0 = along +column, 90 = along
/// -row (image "up").
double line_angle_deg(Point p0, Point p1);

/// Smallest difference between two undirected angles, in [0, 90].
double angle_diff_deg(double a, double b);

double point_segment_distance(Point p, Point a, Point b);

}  // namespace ck
