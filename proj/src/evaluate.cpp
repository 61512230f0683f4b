#include "evaluate.hpp"

#include <algorithm>

#include "json.hpp"
#include "raster_io.hpp"

namespace ck::evaluate {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<fs::path> prediction_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kNotFound, "not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".btg") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw Error(ErrorCode::kNotFound, "no .btg predictions in " + dir.string());
  return out;
}

fs::path partner(const fs::path& gt_dir, const fs::path& pred, const char* ext) {
  fs::path p = gt_dir / pred.stem();
  p += ext;
  if (!fs::exists(p)) throw Error(ErrorCode::kNotFound, "missing ground truth " + p.string());
  return p;
}

json point_json(const metrics::PRPoint& p) {
  return {{"threshold", p.threshold},
          {"precision", p.precision},
          {"recall", p.recall},
          {"tp", p.tp},
          {"fp", p.fp},
          {"fn", p.fn},
          {"precision_degenerate", p.precision_degenerate},
          {"recall_degenerate", p.recall_degenerate}};
}

json curve_json(const metrics::PRCurve& c) {
  json pts = json::array();
  for (const auto& p : c.points) pts.push_back(point_json(p));
  return pts;
}

std::vector<double> uniform(int n) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 thresholds");
  std::vector<double> t;
  for (int k = 0; k < n; ++k) t.push_back(metrics::uniform_threshold(k, n));
  return t;
}

}  // namespace

std::string pixel_report(const fs::path& pred_dir, const fs::path& gt_dir, int n_thresholds) {
  std::vector<ProbabilityMask> preds;
  std::vector<BinaryMask> gts;
  json images = json::array();
  for (const auto& p : prediction_files(pred_dir)) {
    preds.push_back(io::load_raster(p).grid);
    gts.push_back(io::to_mask(io::load_raster(partner(gt_dir, p, ".btg"))));
    json img = {{"name", p.stem().string()}, {"gt_positives", count_positive(gts.back())}};
    if (count_positive(gts.back()) > 0) {
      const auto c = metrics::pixel_pr_curve({&preds.back(), 1}, {&gts.back(), 1}, n_thresholds);
      img["auc"] = metrics::auc_pr(c);
      img["recall_degenerate"] = false;
    } else {
      img["auc"] = nullptr;
      img["recall_degenerate"] = true;
    }
    images.push_back(std::move(img));
  }
  const auto curve = metrics::pixel_pr_curve(preds, gts, n_thresholds);
  return json{{"kind", "pixel"},
              {"n_thresholds", n_thresholds},
              {"auc", metrics::auc_pr(curve)},
              {"curve", curve_json(curve)},
              {"images", images}}
      .dump();
}

std::string contrail_report(const fs::path& pred_dir, const fs::path& gt_dir, int n_thresholds,
                            const metrics::MatchParams& match, const linearize::LinearizeParams& lin) {
  const auto ts = uniform(n_thresholds);
  std::vector<std::int64_t> tp(ts.size(), 0), fp(ts.size(), 0), fn(ts.size(), 0);
  json images = json::array();
  for (const auto& p : prediction_files(pred_dir)) {
    const auto prob = io::load_raster(p).grid;
    const auto gt = linearize::from_jsonl(io::read_file(partner(gt_dir, p, ".jsonl")));
    const auto c = metrics::contrail_pr_curve(prob, gt, ts, match, lin);
    for (std::size_t k = 0; k < ts.size(); ++k) {
      tp[k] += c.points[k].tp;
      fp[k] += c.points[k].fp;
      fn[k] += c.points[k].fn;
    }
    images.push_back({{"name", p.stem().string()}, {"gt_segments", gt.segments.size()}, {"curve", curve_json(c)}});
  }
  metrics::PRCurve pooled;
  for (std::size_t k = 0; k < ts.size(); ++k) pooled.points.push_back(metrics::make_point(ts[k], tp[k], fp[k], fn[k]));
  json out = {{"kind", "contrail"},
              {"match_mode", match.mode == metrics::MatchMode::kOptimal ? "optimal" : "greedy"},
              {"distance", match.distance == metrics::DistanceMode::kSymmetric ? "symmetric" : "pred_to_gt"},
              {"curve", curve_json(pooled)},
              {"images", images}};
  const bool any_gt = !pooled.points.front().recall_degenerate;
  out["auc"] = any_gt ? json(metrics::auc_pr(pooled)) : json(nullptr);
  return out.dump();
}

std::string relaxed_report(const fs::path& pred_dir, const fs::path& gt_dir, double rho, double threshold) {
  std::int64_t ph = 0, np = 0, gh = 0, ng = 0;
  json images = json::array();
  for (const auto& p : prediction_files(pred_dir)) {
    const auto pred = linearize::binarize(io::load_raster(p).grid, threshold);
    const auto gt = io::to_mask(io::load_raster(partner(gt_dir, p, ".btg")));
    const auto r = metrics::relaxed_pr(pred, gt, rho);
    ph += r.pred_hits;
    np += r.n_pred;
    gh += r.gt_hits;
    ng += r.n_gt;
    images.push_back({{"name", p.stem().string()},
                      {"precision", r.precision},
                      {"recall", r.recall},
                      {"precision_degenerate", r.precision_degenerate},
                      {"recall_degenerate", r.recall_degenerate}});
  }
  return json{{"kind", "relaxed"},
              {"rho", rho},
              {"threshold", threshold},
              {"precision", np > 0 ? static_cast<double>(ph) / static_cast<double>(np) : 1.0},
              {"recall", ng > 0 ? static_cast<double>(gh) / static_cast<double>(ng) : 1.0},
              {"precision_degenerate", np == 0},
              {"recall_degenerate", ng == 0},
              {"images", images}}
      .dump();
}

}  // namespace ck::evaluate
