#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace ck::metrics {

using linearize::LineSegment;
using linearize::SegmentSet;

PRPoint make_point(double threshold, std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  PRPoint p;
  p.threshold = threshold;
  p.tp = tp;
  p.fp = fp;
  p.fn = fn;
  if (tp + fp == 0) {
    p.precision = 1.0;
    p.precision_degenerate = true;
  } else {
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    p.recall = 1.0;
    p.recall_degenerate = true;
  } else {
    p.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  return p;
}

double uniform_threshold(int k, int n_thresholds) {
  return static_cast<double>(k) / static_cast<double>(n_thresholds - 1);
}

namespace {

void check_aligned(std::span<const ProbabilityMask> pred, std::span<const BinaryMask> gt) {
  if (pred.size() != gt.size())
    throw Error(ErrorCode::kShapeMismatch, "prediction and ground-truth lists differ in length");
  for (std::size_t i = 0; i < pred.size(); ++i) require_same_shape(pred[i], gt[i], "pixel_pr_curve");
}

// Largest k with reaches(v, t_k), or -1.
int threshold_bin(float v, int n) {
  if (!reaches(v, 0.0)) return -1;
  if (reaches(v, 1.0)) return n - 1;
  int k = static_cast<int>(std::floor(static_cast<double>(v) * (n - 1)));
  k = std::clamp(k, -1, n - 1);
  while (k + 1 <= n - 1 && reaches(v, uniform_threshold(k + 1, n))) ++k;
  while (k >= 0 && !reaches(v, uniform_threshold(k, n))) --k;
  return k;
}

}  // namespace

PRCurve pixel_pr_curve(std::span<const ProbabilityMask> pred, std::span<const BinaryMask> gt,
                       int n_thresholds) {
  if (n_thresholds < 2) throw Error(ErrorCode::kInvalidArgument, "n_thresholds must be >= 2");
  check_aligned(pred, gt);
  const int n = n_thresholds;
  std::vector<std::int64_t> pos(n, 0), neg(n, 0);
  std::int64_t total_pos = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto& p = pred[i];
    const auto& g = gt[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const bool positive = g[j] != 0;
      total_pos += positive;
      if (p.missing(j)) continue;
      const int k = threshold_bin(p[j], n);
      if (k < 0) continue;
      (positive ? pos : neg)[k] += 1;
    }
  }
  if (total_pos == 0)
    throw Error(ErrorCode::kUndefined, "pixel_pr_curve: ground truth has no positives; recall undefined");
  PRCurve curve;
  curve.points.resize(n);
  std::int64_t tp = 0, fp = 0;
  for (int k = n - 1; k >= 0; --k) {
    tp += pos[k];
    fp += neg[k];
    curve.points[k] = make_point(uniform_threshold(k, n), tp, fp, total_pos - tp);
  }
  return curve;
}

PRCurve pixel_pr_curve_exact(std::span<const ProbabilityMask> pred, std::span<const BinaryMask> gt) {
  check_aligned(pred, gt);
  std::vector<std::pair<float, bool>> scored;
  std::int64_t total_pos = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t j = 0; j < pred[i].size(); ++j) {
      const bool positive = gt[i][j] != 0;
      total_pos += positive;
      if (!pred[i].missing(j)) scored.emplace_back(pred[i][j], positive);
    }
  if (total_pos == 0)
    throw Error(ErrorCode::kUndefined, "pixel_pr_curve_exact: ground truth has no positives");
  std::sort(scored.begin(), scored.end(), [](auto a, auto b) { return a.first > b.first; });
  PRCurve curve;
  std::int64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < scored.size();) {
    const float v = scored[i].first;
    while (i < scored.size() && scored[i].first == v) {
      (scored[i].second ? tp : fp) += 1;
      ++i;
    }
    curve.points.push_back(make_point(v, tp, fp, total_pos - tp));
  }
  // Above every score nothing is predicted.
  curve.points.push_back(make_point(std::numeric_limits<double>::infinity(), 0, 0, total_pos));
  std::sort(curve.points.begin(), curve.points.end(),
            [](const PRPoint& a, const PRPoint& b) { return a.threshold < b.threshold; });
  return curve;
}

double auc_pr(const PRCurve& curve) {
  if (curve.points.size() < 2) throw Error(ErrorCode::kInvalidArgument, "auc_pr needs >= 2 points");
  for (const auto& p : curve.points)
    if (p.recall_degenerate)
      throw Error(ErrorCode::kUndefined, "auc_pr: curve has undefined recall");
  std::vector<const PRPoint*> order;
  order.reserve(curve.points.size());
  for (const auto& p : curve.points) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(), [](const PRPoint* a, const PRPoint* b) {
    if (a->recall != b->recall) return a->recall < b->recall;
    return a->threshold > b->threshold;
  });
  double area = 0.0, prev = 0.0;
  for (const PRPoint* p : order) {
    area += (p->recall - prev) * p->precision;
    prev = p->recall;
  }
  return area;
}

// ---- matching ----

void MatchParams::validate() const {
  if (!(angle_tol > 0) || !(dist_tol > 0) || !(km_per_pixel > 0) || !(sample_step > 0))
    throw Error(ErrorCode::kInvalidArgument, "match parameters must all be positive");
}

double mean_distance_px(const LineSegment& from, const LineSegment& to, double step) {
  const double len = from.length();
  const int n = len == 0.0 ? 1 : static_cast<int>(std::ceil(len / step)) + 1;
  if (n == 1) return point_segment_distance(from.p0, to.p0, to.p1);
  double sum = 0.0;
  const Point d = from.p1 - from.p0;
  for (int i = 0; i < n; ++i) {
    const Point p = from.p0 + (static_cast<double>(i) / (n - 1)) * d;
    sum += point_segment_distance(p, to.p0, to.p1);
  }
  return sum / n;
}

double pair_distance_km(const LineSegment& pred, const LineSegment& gt, const MatchParams& params) {
  double px = mean_distance_px(pred, gt, params.sample_step);
  if (params.distance == DistanceMode::kSymmetric)
    px = 0.5 * (px + mean_distance_px(gt, pred, params.sample_step));
  return px * params.km_per_pixel;
}

bool feasible(const LineSegment& pred, const LineSegment& gt, const MatchParams& params) {
  return angle_diff_deg(pred.angle(), gt.angle()) <= params.angle_tol &&
         pair_distance_km(pred, gt, params) <= params.dist_tol;
}

namespace {

// Min-cost perfect assignment on an n x n matrix (rows -> columns).
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

MatchResult match_contrails(const SegmentSet& pred, const SegmentSet& gt, const MatchParams& params) {
  params.validate();
  MatchResult res;
  const int np = static_cast<int>(pred.segments.size());
  const int ng = static_cast<int>(gt.segments.size());
  res.n_pred = static_cast<std::size_t>(np);
  res.n_gt = static_cast<std::size_t>(ng);

  std::vector<std::tuple<double, int, int>> cands;
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < ng; ++j) {
      const auto& p = pred.segments[i];
      const auto& g = gt.segments[j];
      if (angle_diff_deg(p.angle(), g.angle()) > params.angle_tol) continue;
      const double d = pair_distance_km(p, g, params);
      if (d <= params.dist_tol) cands.emplace_back(d, i, j);
    }

  if (params.mode == MatchMode::kGreedy) {
    std::sort(cands.begin(), cands.end());
    std::vector<bool> pu(np, false), gu(ng, false);
    for (const auto& [d, i, j] : cands) {
      if (pu[i] || gu[j]) continue;
      pu[i] = gu[j] = true;
      res.pairs.emplace_back(i, j);
    }
  } else if (!cands.empty()) {
    // Infeasible pairs cost more than any set of feasible ones, so the
    // optimum maximises the match count first and total distance second.
    double total = 0.0;
    for (const auto& c : cands) total += std::get<0>(c);
    const double big = 2.0 * (total + 1.0) * (std::max(np, ng) + 1);
    const int n = std::max(np, ng);
    std::vector<std::vector<double>> cost(n, std::vector<double>(n, big));
    for (const auto& [d, i, j] : cands) cost[i][j] = d;
    const auto assign = hungarian(cost);
    for (int i = 0; i < np; ++i) {
      const int j = assign[i];
      if (j >= 0 && j < ng && cost[i][j] < big) res.pairs.emplace_back(i, j);
    }
  }

  const auto matched = static_cast<double>(res.pairs.size());
  if (np == 0) {
    res.precision = 1.0;
    res.precision_degenerate = true;
  } else {
    res.precision = matched / np;
  }
  if (ng == 0) {
    res.recall = 1.0;
    res.recall_degenerate = true;
  } else {
    res.recall = matched / ng;
  }
  return res;
}

PRCurve contrail_pr_curve(const ProbabilityMask& prob, const SegmentSet& gt,
                          std::span<const double> thresholds, const MatchParams& params,
                          const linearize::LinearizeParams& lin) {
  std::vector<double> ts(thresholds.begin(), thresholds.end());
  for (double t : ts)
    if (!(t >= 0.0 && t <= 1.0))
      throw Error(ErrorCode::kInvalidArgument, "contrail_pr_curve: thresholds must be in [0, 1]");
  std::sort(ts.begin(), ts.end());
  PRCurve curve;
  for (double t : ts) {
    const SegmentSet pred = linearize::linearize(prob, t, lin);
    const MatchResult m = match_contrails(pred, gt, params);
    const auto matched = static_cast<std::int64_t>(m.pairs.size());
    curve.points.push_back(make_point(t, matched, static_cast<std::int64_t>(m.n_pred) - matched,
                                      static_cast<std::int64_t>(m.n_gt) - matched));
  }
  return curve;
}

// ---- relaxed ----

namespace {

// 1-D squared distance lower envelope (Felzenszwalb & Huttenlocher).
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  const double inf = std::numeric_limits<double>::infinity();
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    double s = 0.0;
    for (;;) {
      const int p = v[k];
      s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;  // z[0] = -inf stops this at k == 0
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), inf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

Grid<double> squared_distance_transform(const BinaryMask& mask) {
  const int w = mask.width(), h = mask.height();
  const double inf = std::numeric_limits<double>::infinity();
  Grid<double> out(w, h, inf);
  const int n = std::max(w, h);
  std::vector<double> f, d;
  std::vector<int> v(n + 1);
  std::vector<double> z(n + 2);
  // Columns first, then rows.
  f.resize(h);
  d.resize(h);
  for (int c = 0; c < w; ++c) {
    for (int r = 0; r < h; ++r) f[r] = mask.at(r, c) ? 0.0 : inf;
    edt_1d(f, d, v, z);
    for (int r = 0; r < h; ++r) out.at(r, c) = d[r];
  }
  f.resize(w);
  d.resize(w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) f[c] = out.at(r, c);
    edt_1d(f, d, v, z);
    for (int c = 0; c < w; ++c) out.at(r, c) = d[c];
  }
  return out;
}

RelaxedResult relaxed_pr(const BinaryMask& pred, const BinaryMask& gt, double rho) {
  require_same_shape(pred, gt, "relaxed_pr");
  if (!(rho >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "relaxed_pr: rho must be >= 0");
  const double rho2 = rho * rho;
  const Grid<double> to_gt = squared_distance_transform(gt);
  const Grid<double> to_pred = squared_distance_transform(pred);
  RelaxedResult res;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i]) {
      ++res.n_pred;
      res.pred_hits += to_gt[i] <= rho2;
    }
    if (gt[i]) {
      ++res.n_gt;
      res.gt_hits += to_pred[i] <= rho2;
    }
  }
  if (res.n_pred == 0) res.precision_degenerate = true;
  else res.precision = static_cast<double>(res.pred_hits) / static_cast<double>(res.n_pred);
  if (res.n_gt == 0) res.recall_degenerate = true;
  else res.recall = static_cast<double>(res.gt_hits) / static_cast<double>(res.n_gt);
  return res;
}

// ---- labels ----

void QuorumSpec::validate() const {
  if (n_labelers < 1 || quorum < 1 || quorum > n_labelers)
    throw Error(ErrorCode::kInvalidArgument, "quorum must satisfy 1 <= quorum <= n_labelers");
}

BinaryMask aggregate_labels(std::span<const BinaryMask> masks, const QuorumSpec& q) {
  q.validate();
  if (static_cast<int>(masks.size()) != q.n_labelers)
    throw Error(ErrorCode::kInvalidArgument,
                "aggregate_labels: expected " + std::to_string(q.n_labelers) + " masks, got " +
                    std::to_string(masks.size()));
  for (const auto& m : masks) require_same_shape(m, masks[0], "aggregate_labels");
  BinaryMask out(masks[0].width(), masks[0].height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    int votes = 0;
    for (const auto& m : masks) votes += m[i] != 0;
    out[i] = votes >= q.quorum ? 1 : 0;
  }
  return out;
}

Agreement labeler_agreement(std::span<const BinaryMask> masks) {
  if (masks.size() < 2) throw Error(ErrorCode::kInvalidArgument, "labeler_agreement needs >= 2 masks");
  for (const auto& m : masks) require_same_shape(m, masks[0], "labeler_agreement");
  const auto n = static_cast<std::int64_t>(masks.size());
  Agreement a;
  for (std::size_t i = 0; i < masks[0].size(); ++i) {
    std::int64_t votes = 0;
    for (const auto& m : masks) votes += m[i] != 0;
    a.any += votes >= 1;
    a.majority += 2 * votes > n;
  }
  if (a.any == 0) {
    a.value = 1.0;
    a.degenerate = true;
  } else {
    a.value = static_cast<double>(a.majority) / static_cast<double>(a.any);
  }
  return a;
}

}  // namespace ck::metrics
