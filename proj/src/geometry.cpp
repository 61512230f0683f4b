#include "geometry.hpp"

#include <algorithm>
#include <numbers>

namespace ck {

std::vector<std::vector<Pixel>> connected_components(const BinaryMask& mask) {
  std::vector<std::vector<Pixel>> comps;
  if (mask.empty()) return comps;
  std::vector<std::uint8_t> seen(mask.size(), 0);
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      const std::size_t i = mask.index(r, c);
      if (!mask[i] || seen[i]) continue;
      std::vector<Pixel> comp{{r, c}};
      seen[i] = 1;
      for (std::size_t head = 0; head < comp.size(); ++head) {
        const Pixel p = comp[head];
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = p.r + dr, cc = p.c + dc;
            if ((dr || dc) && mask.contains(rr, cc)) {
              const std::size_t j = mask.index(rr, cc);
              if (mask[j] && !seen[j]) {
                seen[j] = 1;
                comp.push_back({rr, cc});
              }
            }
          }
      }
      comps.push_back(std::move(comp));
    }
  }
  return comps;
}

BinaryMask remove_small_components(const BinaryMask& mask, std::size_t min_px) {
  BinaryMask out(mask.width(), mask.height());
  for (const auto& comp : connected_components(mask))
    if (comp.size() >= min_px)
      for (const auto& p : comp) out.at(p.r, p.c) = 1;
  return out;
}

AxisFit fit_axis(std::span<const Point> pts) {
  AxisFit f;
  if (pts.empty()) return f;
  const double n = static_cast<double>(pts.size());
  for (const auto& p : pts) f.centroid = f.centroid + p;
  f.centroid = (1.0 / n) * f.centroid;
  double srr = 0.0, scc = 0.0, src = 0.0;
  for (const auto& p : pts) {
    const Point d = p - f.centroid;
    srr += d.r * d.r;
    scc += d.c * d.c;
    src += d.r * d.c;
  }
  // Axis angle in the (col, row) plane.
  const double phi = 0.5 * std::atan2(2.0 * src, scc - srr);
  f.dir = {std::sin(phi), std::cos(phi)};
  f.perp = {f.dir.c, -f.dir.r};
  f.t_min = f.s_min = std::numeric_limits<double>::infinity();
  f.t_max = f.s_max = -std::numeric_limits<double>::infinity();
  double ss = 0.0;
  for (const auto& p : pts) {
    const Point d = p - f.centroid;
    const double t = dot(d, f.dir), s = dot(d, f.perp);
    f.t_min = std::min(f.t_min, t);
    f.t_max = std::max(f.t_max, t);
    f.s_min = std::min(f.s_min, s);
    f.s_max = std::max(f.s_max, s);
    ss += s * s;
  }
  f.rms_perp = std::sqrt(ss / n);
  return f;
}

std::vector<Point> to_points(std::span<const Pixel> px) {
  std::vector<Point> out;
  out.reserve(px.size());
  for (const auto& p : px) out.push_back({static_cast<double>(p.r), static_cast<double>(p.c)});
  return out;
}

double line_angle_deg(Point p0, Point p1) {
  double a = std::atan2(-(p1.r - p0.r), p1.c - p0.c) * 180.0 / std::numbers::pi;
  a = std::fmod(a, 180.0);
  if (a < 0.0) a += 180.0;
  if (a >= 180.0) a -= 180.0;
  return a;
}

double angle_diff_deg(double a, double b) {
  double d = std::fmod(std::fabs(a - b), 180.0);
  return std::min(d, 180.0 - d);
}

double point_segment_distance(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return norm(p - a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

}  // namespace ck
