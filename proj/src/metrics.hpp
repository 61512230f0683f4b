#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "common.hpp"
#include "linearize.hpp"

namespace ck::metrics {

struct PRPoint {
  double threshold = 0.0;
  double precision = 1.0;
  double recall = 0.0;
  std::int64_t tp = 0, fp = 0, fn = 0;
  bool precision_degenerate = false;  // tp + fp == 0
  bool recall_degenerate = false;     // tp + fn == 0
};

struct PRCurve {
  std::vector<PRPoint> points;  // threshold ascending
};

/// Precision/recall from counts; empty denominators give 1 with the flag set.
PRPoint make_point(double threshold, std::int64_t tp, std::int64_t fp, std::int64_t fn);

/// t_k = k / (n - 1), k = 0..n-1.
double uniform_threshold(int k, int n_thresholds);

/// Pooled (micro-averaged) pixel PR curve over aligned image lists. A pixel
/// is predicted positive at t when reaches(value, t); missing pixels never are.
/// Throws ErrorCode::kUndefined when the ground truth has no positives.
PRCurve pixel_pr_curve(std::span<const ProbabilityMask> pred, std::span<const BinaryMask> gt,
                       int n_thresholds = 10000);

/// Same counts but with a cut at every distinct predicted value.
PRCurve pixel_pr_curve_exact(std::span<const ProbabilityMask> pred, std::span<const BinaryMask> gt);

/// Step-rule area under the PR curve: points are sorted by recall (ties by
/// descending threshold) and each recall increment is weighted by the
/// precision of the first point reaching it.
double auc_pr(const PRCurve& curve);

// ---- per-contrail matching ----

enum class MatchMode { kGreedy, kOptimal };
enum class DistanceMode { kPredToGt, kSymmetric };

struct MatchParams {
  double angle_tol = 10.0;    // degrees, inclusive
  double dist_tol = 10.0;     // km, inclusive
  double km_per_pixel = 2.0;
  double sample_step = 1.0;   // px along the predicted segment
  MatchMode mode = MatchMode::kGreedy;
  DistanceMode distance = DistanceMode::kPredToGt;

  void validate() const;
};

/// Mean distance (px) from points sampled every `step` px along `from`
/// (both endpoints included) to the finite segment `to`.
double mean_distance_px(const linearize::LineSegment& from, const linearize::LineSegment& to,
                        double step);

/// Pair distance in km under the configured distance mode.
double pair_distance_km(const linearize::LineSegment& pred, const linearize::LineSegment& gt,
                        const MatchParams& params);

bool feasible(const linearize::LineSegment& pred, const linearize::LineSegment& gt,
              const MatchParams& params);

struct MatchResult {
  double precision = 1.0;
  double recall = 1.0;
  bool precision_degenerate = false;
  bool recall_degenerate = false;
  std::vector<std::pair<int, int>> pairs;  // (pred index, gt index)
  std::size_t n_pred = 0, n_gt = 0;
};

MatchResult match_contrails(const linearize::SegmentSet& pred, const linearize::SegmentSet& gt,
                            const MatchParams& params = {});

/// For each threshold: binarize, detect, merge, match.
PRCurve contrail_pr_curve(const ProbabilityMask& prob, const linearize::SegmentSet& gt,
                          std::span<const double> thresholds, const MatchParams& params = {},
                          const linearize::LinearizeParams& lin = {});

// ---- relaxed PR ----

/// Exact squared Euclidean distance to the nearest positive pixel; +inf when
/// the mask has none.
Grid<double> squared_distance_transform(const BinaryMask& mask);

struct RelaxedResult {
  double precision = 1.0;
  double recall = 1.0;
  bool precision_degenerate = false;
  bool recall_degenerate = false;
  std::int64_t pred_hits = 0, n_pred = 0;
  std::int64_t gt_hits = 0, n_gt = 0;
};

RelaxedResult relaxed_pr(const BinaryMask& pred, const BinaryMask& gt, double rho = 2.0);

// ---- labels ----

struct QuorumSpec {
  int n_labelers = 4;
  int quorum = 3;

  void validate() const;
};

BinaryMask aggregate_labels(std::span<const BinaryMask> masks, const QuorumSpec& q = {});

struct Agreement {
  double value = 1.0;
  bool degenerate = false;  // no labeler marked anything
  std::int64_t majority = 0, any = 0;
};

/// |pixels marked by a strict majority| / |pixels marked by anyone|.
Agreement labeler_agreement(std::span<const BinaryMask> masks);

}  // namespace ck::metrics
