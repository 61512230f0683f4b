#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "metrics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ck;
using namespace ck::metrics;
using linearize::LineSegment;
using linearize::SegmentSet;

namespace {

LineSegment seg(double r0, double c0, double r1, double c1) { return {{r0, c0}, {r1, c1}}; }

LineSegment rotated(const LineSegment& s, double deg) {
  const double a = deg * std::numbers::pi / 180.0;
  const Point m = 0.5 * (s.p0 + s.p1);
  auto rot = [&](Point p) {
    const Point d = p - m;
    // Positive angles turn counter-clockwise on screen (row axis points down).
    return m + Point{d.r * std::cos(a) - d.c * std::sin(a), d.r * std::sin(a) + d.c * std::cos(a)};
  };
  return {rot(s.p0), rot(s.p1)};
}

SegmentSet random_segments(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> pos(0, 20), len(2, 12), ang(0, std::numbers::pi);
  SegmentSet s;
  for (int i = 0; i < n; ++i) {
    const Point p{pos(rng), pos(rng)};
    const double a = ang(rng), l = len(rng);
    s.segments.push_back({p, p + l * Point{-std::sin(a), std::cos(a)}});
  }
  return s;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("2x2 curve against enumeration") {
  ProbabilityMask p(2, 2);
  p[0] = 0.9f;
  p[1] = 0.8f;
  p[2] = 0.1f;
  p[3] = 0.0f;
  BinaryMask g(2, 2);
  g[0] = 1;
  std::vector<ProbabilityMask> ps{p};
  std::vector<BinaryMask> gs{g};
  const PRCurve c = pixel_pr_curve(ps, gs, 11);
  REQUIRE(c.points.size() == 11);
  for (const auto& pt : c.points) {
    const auto want = oracle::pixel_counts(ps, gs, pt.threshold);
    REQUIRE(pt.tp == want.tp);
    REQUIRE(pt.fp == want.fp);
    REQUIRE(pt.fn == want.fn);
  }
  const auto& half = c.points[5];
  CHECK(half.tp == 1);
  CHECK(half.fp == 1);
  CHECK(half.precision == 0.5);
  CHECK(half.recall == 1.0);
  // By hand: recall reaches 1 first at t = 0.9 with precision 1.
  CHECK(auc_pr(c) == 1.0);
  CHECK(auc_pr(pixel_pr_curve(ps, gs)) == 1.0);
}

TEST_CASE("perfect and adversarial predictors") {
  std::mt19937_64 rng(5);
  const BinaryMask g = test::random_mask(rng, 8, 8, 0.3);
  ProbabilityMask same(8, 8), inv(8, 8);
  for (std::size_t i = 0; i < g.size(); ++i) {
    same[i] = g[i];
    inv[i] = 1.0f - g[i];
  }
  const std::vector<BinaryMask> gs{g};
  const std::vector<ProbabilityMask> a{same}, b{inv};
  const auto perfect = pixel_pr_curve(a, gs, 101);
  for (const auto& pt : perfect.points)
    if (pt.threshold > 0) REQUIRE((pt.precision == 1.0 && pt.recall == 1.0));
  CHECK(auc_pr(perfect) == 1.0);
  for (const auto& pt : pixel_pr_curve(b, gs, 101).points)
    if (pt.threshold > 0) REQUIRE(pt.precision == 0.0);
}

TEST_CASE("constant prediction gives the prevalence") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    const BinaryMask g = test::random_mask(rng, 8, 8, 0.25);
    if (count_positive(g) == 0) continue;
    const std::vector<BinaryMask> gs{g};
    const std::vector<ProbabilityMask> ps{ProbabilityMask(8, 8, 0.5f)};
    const double prevalence = static_cast<double>(count_positive(g)) / 64.0;
    CHECK(auc_pr(pixel_pr_curve(ps, gs, 10000)) == doctest::Approx(prevalence).epsilon(1e-12));
  }
}

TEST_CASE("pixel curve and area against brute force") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n_img = 1 + int(rng() % 3), w = 1 + int(rng() % 8), h = 1 + int(rng() % 8);
    std::vector<ProbabilityMask> ps;
    std::vector<BinaryMask> gs;
    for (int i = 0; i < n_img; ++i) {
      ps.push_back(test::random_prob(rng, w, h, int(rng() % 2) ? 10 : 0));
      if (rng() % 4 == 0) ps.back().set_missing(0, 0);
      gs.push_back(test::random_mask(rng, w, h, 0.4));
    }
    gs[0][0] = 1;
    const int n = 2 + int(rng() % 40);
    const PRCurve c = pixel_pr_curve(ps, gs, n);
    std::vector<std::tuple<double, double, double>> pts;
    for (int k = 0; k < n; ++k) {
      const auto want = oracle::pixel_counts(ps, gs, double(k) / (n - 1));
      const auto& pt = c.points[k];
      REQUIRE(pt.threshold == double(k) / (n - 1));
      REQUIRE(pt.tp == want.tp);
      REQUIRE(pt.fp == want.fp);
      REQUIRE(pt.fn == want.fn);
      REQUIRE(std::fabs(pt.precision - oracle::precision_of(want)) <= 1e-12);
      REQUIRE(std::fabs(pt.recall - oracle::recall_of(want)) <= 1e-12);
      REQUIRE(pt.tp + pt.fn == want.tp + want.fn);
      pts.emplace_back(pt.threshold, oracle::precision_of(want), oracle::recall_of(want));
    }
    REQUIRE(std::fabs(auc_pr(c) - oracle::step_area(pts)) <= 1e-12);
  }
  std::vector<ProbabilityMask> ps{ProbabilityMask(2, 2)};
  std::vector<BinaryMask> gs{BinaryMask(2, 2)};
  CHECK_THROWS_AS(pixel_pr_curve(ps, gs, 10), Error);
  gs[0][0] = 1;
  CHECK_THROWS_AS(pixel_pr_curve(ps, gs, 1), Error);
  gs[0] = BinaryMask(3, 2);
  CHECK_THROWS_AS(pixel_pr_curve(ps, gs, 10), Error);
}

TEST_CASE("uniform thresholds approximate the exact curve") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<ProbabilityMask> ps{test::random_prob(rng, 64, 64, 1000)};
    const std::vector<BinaryMask> gs{test::random_mask(rng, 64, 64, 0.2)};
    const double exact = auc_pr(pixel_pr_curve_exact(ps, gs));
    CHECK(std::fabs(auc_pr(pixel_pr_curve(ps, gs, 10000)) - exact) <= 1e-3);
    // Only the ranking matters for the exact curve.
    ProbabilityMask sq = ps[0];
    for (auto& v : sq.values()) v = v * v;
    CHECK(auc_pr(pixel_pr_curve_exact(std::vector<ProbabilityMask>{sq}, gs)) == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("matching gates") {
  const MatchParams p;
  const LineSegment g = seg(20, 10, 20, 40);
  CHECK(mean_distance_px(seg(24, 10, 24, 40), g, 1.0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(feasible(seg(24, 10, 24, 40), g, p));
  CHECK_FALSE(feasible(seg(26, 10, 26, 40), g, p));
  CHECK(feasible(rotated(g, 9.9), g, p));
  CHECK_FALSE(feasible(rotated(g, 10.1), g, p));
  CHECK_FALSE(feasible(rotated(g, 15.0), g, p));
  // 5 px is exactly 10 km: inclusive.
  CHECK(feasible(seg(25, 10, 25, 40), g, p));

  const SegmentSet gs{{g}};
  auto r = match_contrails(gs, gs, p);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  r = match_contrails(SegmentSet{{rotated(g, 15.0)}}, gs, p);
  CHECK(r.pairs.empty());
  r = match_contrails(SegmentSet{}, gs, p);
  CHECK(r.precision_degenerate);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 0.0);
  r = match_contrails(SegmentSet{}, SegmentSet{}, p);
  CHECK((r.precision_degenerate && r.recall_degenerate));
}

TEST_CASE("matching against brute force") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 400; ++trial) {
    const auto pred = random_segments(rng, int(rng() % 5));
    const auto gt = random_segments(rng, int(rng() % 5));
    MatchParams p;
    p.dist_tol = 4.0 + double(rng() % 16);
    p.angle_tol = 5.0 + double(rng() % 40);
    p.distance = rng() % 2 ? DistanceMode::kSymmetric : DistanceMode::kPredToGt;
    const bool sym = p.distance == DistanceMode::kSymmetric;
    for (std::size_t i = 0; i < pred.segments.size(); ++i)
      for (std::size_t j = 0; j < gt.segments.size(); ++j) {
        double want = oracle::mean_dist(pred.segments[i], gt.segments[j], 1.0);
        if (sym) want = 0.5 * (want + oracle::mean_dist(gt.segments[j], pred.segments[i], 1.0));
        REQUIRE(std::fabs(pair_distance_km(pred.segments[i], gt.segments[j], p) - 2.0 * want) <= 1e-12);
      }
    const auto want = oracle::greedy_match(pred, gt, p.angle_tol, p.dist_tol, p.km_per_pixel, sym);
    const auto got = match_contrails(pred, gt, p);
    REQUIRE(got.pairs == want);

    std::vector<std::vector<bool>> ok(pred.segments.size(), std::vector<bool>(gt.segments.size()));
    for (std::size_t i = 0; i < pred.segments.size(); ++i)
      for (std::size_t j = 0; j < gt.segments.size(); ++j) ok[i][j] = feasible(pred.segments[i], gt.segments[j], p);
    p.mode = MatchMode::kOptimal;
    const auto best = match_contrails(pred, gt, p);
    REQUIRE(int(best.pairs.size()) == oracle::max_matching(ok));

    if (sym) {
      // Swapping roles swaps precision and recall.
      const auto swapped = match_contrails(gt, pred, p);
      REQUIRE(swapped.precision == best.recall);
      REQUIRE(swapped.recall == best.precision);
    }
  }
}

TEST_CASE("contrail PR examples") {
  const LineSegment a = seg(20, 8, 20, 50), b = seg(40, 12, 60, 44);
  ProbabilityMask prob(64, 64);
  linearize::draw_line(prob, a.p0, a.p1, 0.9f);
  const std::vector<double> ts{0.1, 0.5, 0.9, 0.95};
  auto c = contrail_pr_curve(prob, SegmentSet{{a}}, ts);
  for (const auto& pt : c.points) {
    if (pt.threshold <= 0.9) {
      CHECK(pt.precision == 1.0);
      CHECK(pt.recall == 1.0);
    } else {
      CHECK(pt.recall == 0.0);
      CHECK(pt.precision_degenerate);
    }
  }
  c = contrail_pr_curve(ProbabilityMask(64, 64), SegmentSet{{a}}, ts);
  for (const auto& pt : c.points) CHECK((pt.recall == 0.0 && pt.precision_degenerate));

  linearize::draw_line(prob, b.p0, b.p1, 0.5f);
  const std::vector<double> two{0.4, 0.7};
  c = contrail_pr_curve(prob, SegmentSet{{a, b}}, two);
  CHECK(c.points[0].recall == 1.0);
  CHECK(c.points[1].recall == 0.5);
}

TEST_CASE("relaxed PR") {
  BinaryMask g(24, 24), p(24, 24);
  g.at(10, 10) = 1;
  p.at(10, 13) = 1;
  auto r = relaxed_pr(p, g, 2.0);
  CHECK(r.precision == 0.0);
  CHECK(r.recall == 0.0);
  p.at(10, 13) = 0;
  p.at(10, 12) = 1;
  r = relaxed_pr(p, g, 2.0);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  r = relaxed_pr(BinaryMask(24, 24), g, 2.0);
  CHECK(r.precision_degenerate);

  std::mt19937_64 rng(12);
  const double rhos[] = {0.0, 1.0, 1.5, 2.0, 2.5, 3.0};
  for (int t = 0; t < 300; ++t) {
    const int w = 1 + int(rng() % 8), h = 1 + int(rng() % 8);
    const auto pm = test::random_mask(rng, w, h, 0.2), gm = test::random_mask(rng, w, h, 0.2);
    double last_p = -1, last_r = -1;
    for (double rho : rhos) {
      const auto got = relaxed_pr(pm, gm, rho);
      const auto want = oracle::relaxed(pm, gm, rho);
      REQUIRE(got.pred_hits == want.pred_hits);
      REQUIRE(got.gt_hits == want.gt_hits);
      REQUIRE(got.n_pred == want.n_pred);
      REQUIRE(got.n_gt == want.n_gt);
      REQUIRE(got.precision >= last_p);
      REQUIRE(got.recall >= last_r);
      last_p = got.precision;
      last_r = got.recall;
    }
    const auto same = relaxed_pr(gm, gm, 0.0);
    REQUIRE((same.precision == 1.0 && same.recall == 1.0));
  }
  const auto d = squared_distance_transform(BinaryMask(3, 3));
  CHECK(std::isinf(d[4]));
}

TEST_CASE("quorum aggregation") {
  std::mt19937_64 rng(13);
  const auto m = test::random_mask(rng, 8, 8);
  const std::vector<BinaryMask> same(4, m);
  CHECK(aggregate_labels(same) == m);
  std::vector<BinaryMask> v(4, BinaryMask(2, 1));
  v[0][0] = v[1][0] = 1;
  v[0][1] = v[1][1] = v[2][1] = 1;
  const auto out = aggregate_labels(v);
  CHECK(out[0] == 0);
  CHECK(out[1] == 1);
  CHECK(count_positive(aggregate_labels(std::vector<BinaryMask>(4, BinaryMask(3, 3)))) == 0);
  CHECK_THROWS_AS(aggregate_labels(std::vector<BinaryMask>(3, BinaryMask(3, 3))), Error);
  CHECK_THROWS_AS(aggregate_labels(v, {4, 5}), Error);

  for (int t = 0; t < 300; ++t) {
    const int n = 1 + int(rng() % 5), q = 1 + int(rng() % n);
    std::vector<BinaryMask> ms;
    for (int k = 0; k < n; ++k) ms.push_back(test::random_mask(rng, 6, 5, 0.5));
    const auto base = aggregate_labels(ms, {n, q});
    REQUIRE(base == oracle::quorum(ms, q));
    ms[rng() % n][rng() % 30] = 1;
    const auto more = aggregate_labels(ms, {n, q});
    for (std::size_t i = 0; i < base.size(); ++i)
      if (base[i]) REQUIRE(more[i]);
  }
}

TEST_CASE("labeler agreement") {
  std::mt19937_64 rng(14);
  const auto m = test::random_mask(rng, 8, 8);
  CHECK(labeler_agreement(std::vector<BinaryMask>(3, m)).value == 1.0);
  std::vector<BinaryMask> two(2, BinaryMask(4, 4));
  two[0][0] = 1;
  two[1][5] = 1;
  CHECK(labeler_agreement(two).value == 0.0);

  std::vector<BinaryMask> four(4, BinaryMask(10, 1));
  for (int i = 0; i < 10; ++i) four[0][i] = 1;
  for (int i = 0; i < 6; ++i) four[1][i] = four[2][i] = 1;
  const auto a = labeler_agreement(four);
  CHECK(a.value == doctest::Approx(0.6));
  CHECK(a.majority == 6);
  CHECK(a.any == 10);
  CHECK(labeler_agreement(std::vector<BinaryMask>(2, BinaryMask(3, 3))).degenerate);
  CHECK_THROWS_AS(labeler_agreement(std::vector<BinaryMask>{m}), Error);
}

}  // TEST_SUITE
