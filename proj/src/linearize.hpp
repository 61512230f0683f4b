#pragma once

#include <string>
#include <vector>

#include "common.hpp"
#include "geometry.hpp"

namespace ck::linearize {

struct LineSegment {
  Point p0;
  Point p1;

  double angle() const { return line_angle_deg(p0, p1); }
  double length() const { return norm(p1 - p0); }
  friend bool operator==(const LineSegment&, const LineSegment&) = default;
};

struct SegmentSet {
  std::vector<LineSegment> segments;
  double source_threshold = 0.0;
};

struct LinearizeParams {
  double width_tol = 1.5;     // px RMS perpendicular residual
  int min_component_px = 10;
  double angle_tol = 10.0;    // degrees
  double lateral_tol = 2.0;   // px
  double gap_tol = 3.0;       // px
};

/// value >= threshold -> 1. Missing pixels map to 0.
BinaryMask binarize(const ProbabilityMask& mask, double threshold);

/// Fits one segment per 8-connected component, splitting recursively at the
/// point of maximum deviation while the component is not straight.
SegmentSet detect_segments(const BinaryMask& mask, const LinearizeParams& params = {});

/// Gap along the common axis (0 on overlap), or a negative value when the
/// pair fails the angle or lateral gates.
double merge_gap(const LineSegment& a, const LineSegment& b, const LinearizeParams& params);

LineSegment merge_pair(const LineSegment& a, const LineSegment& b);

/// Merges to a fixpoint, always taking the feasible pair with the smallest
/// gap (ties by index).
SegmentSet merge_segments(SegmentSet set, const LinearizeParams& params = {});

/// binarize -> detect -> merge.
SegmentSet linearize(const ProbabilityMask& mask, double threshold, const LinearizeParams& params = {});

/// Marks the pixels a straight line between p0 and p1 passes through
/// (uniform sampling at <= 1 px steps, rounded to the nearest pixel).
void draw_line(BinaryMask& mask, Point p0, Point p1, std::uint8_t value = 1);
void draw_line(Grid<float>& grid, Point p0, Point p1, float value);

std::string to_jsonl(const SegmentSet& set);
SegmentSet from_jsonl(const std::string& text);

}  // namespace ck::linearize
