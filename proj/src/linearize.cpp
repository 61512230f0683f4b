#include "linearize.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace ck::linearize {
namespace {

constexpr std::size_t kMinPiece = 3;
constexpr int kMaxDepth = 32;

void emit(const AxisFit& f, std::vector<LineSegment>& out) {
  if (!(f.t_max > f.t_min)) return;
  out.push_back({f.centroid + f.t_min * f.dir, f.centroid + f.t_max * f.dir});
}

void fit_recursive(const std::vector<Point>& pts, const LinearizeParams& params, int depth,
                   std::vector<LineSegment>& out) {
  if (pts.size() < 2) return;
  const AxisFit f = fit_axis(pts);
  if (f.rms_perp <= params.width_tol || pts.size() < 2 * kMinPiece || depth >= kMaxDepth) {
    emit(f, out);
    return;
  }
  // Chord between the extremal points along the principal axis.
  std::size_t ia = 0, ib = 0;
  double ta = std::numeric_limits<double>::infinity(), tb = -ta;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double t = dot(pts[i] - f.centroid, f.dir);
    if (t < ta) { ta = t; ia = i; }
    if (t > tb) { tb = t; ib = i; }
  }
  const Point a = pts[ia];
  const Point chord = pts[ib] - a;
  const double chord_len = norm(chord);
  if (chord_len == 0.0) {
    emit(f, out);
    return;
  }
  const Point u = (1.0 / chord_len) * chord;
  const Point un{u.c, -u.r};
  std::size_t ik = 0;
  double dmax = -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = std::fabs(dot(pts[i] - a, un));
    if (d > dmax) { dmax = d; ik = i; }
  }
  // A straight but wide band has no bend to split at.
  if (dmax <= 2.0 * params.width_tol) {
    emit(f, out);
    return;
  }
  const double sk = dot(pts[ik] - a, u);
  std::vector<Point> left, right;
  for (const auto& p : pts) (dot(p - a, u) <= sk ? left : right).push_back(p);
  if (left.size() < kMinPiece || right.size() < kMinPiece) {
    std::vector<double> s;
    s.reserve(pts.size());
    for (const auto& p : pts) s.push_back(dot(p - a, u));
    std::nth_element(s.begin(), s.begin() + s.size() / 2, s.end());
    const double cut = s[s.size() / 2];
    left.clear();
    right.clear();
    for (const auto& p : pts) (dot(p - a, u) < cut ? left : right).push_back(p);
    if (left.empty() || right.empty()) {
      emit(f, out);
      return;
    }
  }
  fit_recursive(left, params, depth + 1, out);
  fit_recursive(right, params, depth + 1, out);
}

}  // namespace

BinaryMask binarize(const ProbabilityMask& mask, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, "binarize: threshold must be in [0, 1]");
  BinaryMask out(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i)
    out[i] = (!mask.missing(i) && reaches(mask[i], threshold)) ? 1 : 0;
  return out;
}

SegmentSet detect_segments(const BinaryMask& mask, const LinearizeParams& params) {
  SegmentSet set;
  for (const auto& comp : connected_components(mask)) {
    if (comp.size() < static_cast<std::size_t>(std::max(params.min_component_px, 1))) continue;
    fit_recursive(to_points(comp), params, 0, set.segments);
  }
  return set;
}

double merge_gap(const LineSegment& a, const LineSegment& b, const LinearizeParams& params) {
  if (angle_diff_deg(a.angle(), b.angle()) > params.angle_tol) return -1.0;
  auto line_dist = [](Point p, const LineSegment& s) {
    const Point d = s.p1 - s.p0;
    const double len = norm(d);
    if (len == 0.0) return norm(p - s.p0);
    return std::fabs(d.r * (p.c - s.p0.c) - d.c * (p.r - s.p0.r)) / len;
  };
  const double lateral = std::max({line_dist(b.p0, a), line_dist(b.p1, a), line_dist(a.p0, b),
                                   line_dist(a.p1, b)});
  if (lateral > params.lateral_tol) return -1.0;
  const LineSegment& ref = a.length() >= b.length() ? a : b;
  const double len = ref.length();
  if (len == 0.0) return 0.0;
  const Point u = (1.0 / len) * (ref.p1 - ref.p0);
  auto proj = [&](Point p) { return dot(p - ref.p0, u); };
  const double a0 = std::min(proj(a.p0), proj(a.p1)), a1 = std::max(proj(a.p0), proj(a.p1));
  const double b0 = std::min(proj(b.p0), proj(b.p1)), b1 = std::max(proj(b.p0), proj(b.p1));
  const double gap = std::max(0.0, std::max(a0, b0) - std::min(a1, b1));
  return gap <= params.gap_tol ? gap : -1.0;
}

LineSegment merge_pair(const LineSegment& a, const LineSegment& b) {
  const Point pts[4] = {a.p0, a.p1, b.p0, b.p1};
  const AxisFit f = fit_axis(pts);
  return {f.centroid + f.t_min * f.dir, f.centroid + f.t_max * f.dir};
}

SegmentSet merge_segments(SegmentSet set, const LinearizeParams& params) {
  if (params.angle_tol < 0 || params.lateral_tol < 0 || params.gap_tol < 0)
    throw Error(ErrorCode::kInvalidArgument, "merge_segments: tolerances must be >= 0");
  auto& segs = set.segments;
  for (;;) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < segs.size(); ++i)
      for (std::size_t j = i + 1; j < segs.size(); ++j) {
        const double g = merge_gap(segs[i], segs[j], params);
        if (g >= 0.0 && g < best) {
          best = g;
          bi = i;
          bj = j;
        }
      }
    if (!std::isfinite(best)) break;
    segs[bi] = merge_pair(segs[bi], segs[bj]);
    segs.erase(segs.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return set;
}

SegmentSet linearize(const ProbabilityMask& mask, double threshold, const LinearizeParams& params) {
  SegmentSet s = merge_segments(detect_segments(binarize(mask, threshold), params), params);
  s.source_threshold = threshold;
  return s;
}

namespace {
template <typename G, typename V>
void draw_impl(G& g, Point p0, Point p1, V value) {
  const Point d = p1 - p0;
  const int steps = std::max(1, static_cast<int>(std::ceil(std::max(std::fabs(d.r), std::fabs(d.c)))));
  for (int i = 0; i <= steps; ++i) {
    const Point p = p0 + (static_cast<double>(i) / steps) * d;
    const int r = static_cast<int>(std::lround(p.r)), c = static_cast<int>(std::lround(p.c));
    if (g.contains(r, c)) g.at(r, c) = value;
  }
}
}  // namespace

void draw_line(BinaryMask& mask, Point p0, Point p1, std::uint8_t value) { draw_impl(mask, p0, p1, value); }
void draw_line(Grid<float>& grid, Point p0, Point p1, float value) { draw_impl(grid, p0, p1, value); }

std::string to_jsonl(const SegmentSet& set) {
  std::string out;
  for (const auto& s : set.segments) {
    nlohmann::json j = {{"p0", {s.p0.r, s.p0.c}},
                        {"p1", {s.p1.r, s.p1.c}},
                        {"angle", s.angle()},
                        {"length", s.length()},
                        {"source_threshold", set.source_threshold}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

SegmentSet from_jsonl(const std::string& text) {
  SegmentSet set;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LineSegment s{{j.at("p0").at(0).get<double>(), j.at("p0").at(1).get<double>()},
                    {j.at("p1").at(0).get<double>(), j.at("p1").at(1).get<double>()}};
      if (j.contains("source_threshold")) set.source_threshold = j["source_threshold"].get<double>();
      set.segments.push_back(s);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument,
                  "segments line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return set;
}

}  // namespace ck::linearize
