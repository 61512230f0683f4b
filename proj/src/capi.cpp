#include "contrailkit/contrailkit.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "annotate.hpp"
#include "coverage.hpp"
#include "detector.hpp"
#include "evaluate.hpp"
#include "flightenv.hpp"
#include "ingest.hpp"
#include "json.hpp"
#include "linearize.hpp"
#include "metrics.hpp"
#include "raster_io.hpp"
#include "records.hpp"
#include "sampler.hpp"
#include "server.hpp"

struct ck_raster {
  ck::BTGrid g;
};

struct ck_segments {
  ck::linearize::SegmentSet s;
};

struct ck_store {
  explicit ck_store(const char* root) : store(root) {}
  ck::annotate::Store store;
};

namespace {

thread_local std::string g_last_error;

ck_status fail(ck_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
ck_status guard(F&& f) noexcept {
  try {
    g_last_error.clear();
    f();
    return CK_OK;
  } catch (const ck::Error& e) {
    return fail(static_cast<ck_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(CK_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CK_INTERNAL, e.what());
  }
}

void need(const void* p, const char* what) {
  if (!p) throw ck::Error(ck::ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ck::BinaryMask as_mask(const ck_raster* r) {
  ck::BinaryMask m(r->g.width(), r->g.height());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = !r->g.grid.missing(i) && r->g.grid[i] >= 0.5f;
  return m;
}

ck_raster* wrap_mask(const ck::BinaryMask& m) {
  return new ck_raster{ck::io::from_mask(m)};
}

ck::detector::MannsteinParams to_cpp(const ck_mannstein_params& p) {
  ck::detector::MannsteinParams q;
  q.n_orientations = p.n_orientations;
  q.kernel_len = p.kernel_len;
  q.kernel_width = p.kernel_width;
  q.btd_threshold = p.btd_threshold;
  q.response_threshold = p.response_threshold;
  q.min_component_px = p.min_component_px;
  q.background_window = p.background_window;
  return q;
}

ck::linearize::LinearizeParams to_cpp(const ck_linearize_params& p) {
  return {p.width_tol, p.min_component_px, p.angle_tol, p.lateral_tol, p.gap_tol};
}

ck::metrics::MatchParams to_cpp(const ck_match_params& p) {
  ck::metrics::MatchParams q;
  q.angle_tol = p.angle_tol_deg;
  q.dist_tol = p.dist_tol_km;
  q.km_per_pixel = p.km_per_pixel;
  q.sample_step = p.sample_step_px;
  q.mode = p.mode == CK_MATCH_OPTIMAL ? ck::metrics::MatchMode::kOptimal : ck::metrics::MatchMode::kGreedy;
  q.distance = p.distance == CK_DIST_SYMMETRIC ? ck::metrics::DistanceMode::kSymmetric
                                               : ck::metrics::DistanceMode::kPredToGt;
  return q;
}

nlohmann::json curve_json(const ck::metrics::PRCurve& c) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : c.points)
    pts.push_back({{"threshold", p.threshold},
                   {"precision", p.precision},
                   {"recall", p.recall},
                   {"tp", p.tp},
                   {"fp", p.fp},
                   {"fn", p.fn},
                   {"precision_degenerate", p.precision_degenerate},
                   {"recall_degenerate", p.recall_degenerate}});
  return {{"auc", ck::metrics::auc_pr(c)}, {"points", pts}};
}

}  // namespace

extern "C" {

const char* ck_last_error(void) { return g_last_error.c_str(); }
const char* ck_version(void) { return "0.1.0"; }
void ck_string_free(char* s) { std::free(s); }

ck_status ck_raster_create(int width, int height, const float* values, const uint8_t* missing, ck_raster** out) {
  return guard([&] {
    need(out, "out");
    auto r = std::make_unique<ck_raster>();
    r->g.grid = ck::Grid<float>(width, height);
    for (std::size_t i = 0; i < r->g.grid.size(); ++i) {
      if (values) r->g.grid[i] = values[i];
      if (missing) r->g.grid.set_missing(i, missing[i] != 0);
    }
    *out = r.release();
  });
}

ck_status ck_raster_load(const char* path, ck_raster** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new ck_raster{ck::io::load_raster(path)};
  });
}

ck_status ck_raster_save(const ck_raster* r, const char* path) {
  return guard([&] {
    need(r, "raster");
    need(path, "path");
    ck::io::save_raster(path, r->g);
  });
}

void ck_raster_free(ck_raster* r) { delete r; }
int ck_raster_width(const ck_raster* r) { return r ? r->g.width() : 0; }
int ck_raster_height(const ck_raster* r) { return r ? r->g.height() : 0; }
const float* ck_raster_values(const ck_raster* r) { return r ? r->g.grid.values().data() : nullptr; }
const uint8_t* ck_raster_missing(const ck_raster* r) { return r ? r->g.grid.missing_flags().data() : nullptr; }

ck_ash_bounds ck_ash_bounds_default(void) {
  const ck::ingest::AshBounds b;
  return {b.red_lo, b.red_hi, b.green_lo, b.green_hi, b.blue_lo, b.blue_hi};
}

ck_status ck_render_ash_png(const ck_raster* bt12, const ck_raster* bt11, const ck_raster* bt8,
                            const ck_ash_bounds* bounds, const char* png_path) {
  return guard([&] {
    need(bt12, "bt12");
    need(bt11, "bt11");
    need(bt8, "bt8");
    need(png_path, "png_path");
    const ck_ash_bounds b = bounds ? *bounds : ck_ash_bounds_default();
    const ck::ingest::AshBounds ab{b.red_lo, b.red_hi, b.green_lo, b.green_hi, b.blue_lo, b.blue_hi};
    ck::io::save_png(png_path, ck::ingest::render_ash(bt12->g, bt11->g, bt8->g, ab));
  });
}

ck_status ck_records_verify(const char* path, char** json_out) {
  return guard([&] {
    need(path, "path");
    need(json_out, "json_out");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ck::Error(ck::ErrorCode::kIo, std::string("cannot open ") + path);
    ck::records::RecordReader reader(in);
    std::size_t n = 0, masks = 0, positives = 0;
    std::set<std::string> bands, unknown;
    while (auto rec = reader.next()) {
      ++n;
      masks += rec->labeler_masks.size();
      positives += ck::count_positive(rec->aggregated_mask);
      for (const auto& [k, _] : rec->channels) bands.insert(k);
      for (const auto& e : rec->unknown) unknown.insert(e.key);
    }
    const nlohmann::json j = {{"records", n},
                              {"labeler_masks", masks},
                              {"aggregated_positive_pixels", positives},
                              {"bands", bands},
                              {"unknown_keys", unknown}};
    *json_out = dup_string(j.dump());
  });
}

ck_mannstein_params ck_mannstein_params_default(void) {
  const ck::detector::MannsteinParams p;
  return {p.n_orientations, p.kernel_len,       p.kernel_width,     p.btd_threshold,
          p.response_threshold, p.min_component_px, p.background_window};
}

ck_status ck_mannstein_params_from_json(const char* text, ck_mannstein_params* params) {
  return guard([&] {
    need(text, "json");
    need(params, "params");
    ck_mannstein_params p = *params;
    try {
      const auto j = nlohmann::json::parse(text);
      if (!j.is_object()) throw ck::Error(ck::ErrorCode::kInvalidArgument, "screen params: expected an object");
      for (const auto& [k, v] : j.items()) {
        if (k == "n_orientations") p.n_orientations = v.get<int>();
        else if (k == "kernel_len") p.kernel_len = v.get<int>();
        else if (k == "kernel_width") p.kernel_width = v.get<int>();
        else if (k == "btd_threshold") p.btd_threshold = v.get<double>();
        else if (k == "response_threshold") p.response_threshold = v.get<double>();
        else if (k == "min_component_px") p.min_component_px = v.get<int>();
        else if (k == "background_window") p.background_window = v.get<int>();
        else throw ck::Error(ck::ErrorCode::kInvalidArgument, "screen params: unknown key " + k);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ck::Error(ck::ErrorCode::kInvalidArgument, std::string("screen params: ") + e.what());
    }
    to_cpp(p).validate();
    *params = p;
  });
}

ck_status ck_btd(const ck_raster* bt11, const ck_raster* bt12, ck_raster** out) {
  return guard([&] {
    need(bt11, "bt11");
    need(bt12, "bt12");
    need(out, "out");
    *out = new ck_raster{ck::detector::btd(bt11->g, bt12->g)};
  });
}

ck_status ck_mannstein_screen(const ck_raster* btd, const ck_mannstein_params* params, ck_raster** mask_out,
                              int* passed_out) {
  return guard([&] {
    need(btd, "btd");
    const auto p = to_cpp(params ? *params : ck_mannstein_params_default());
    const auto res = ck::detector::mannstein_screen(btd->g, p);
    if (mask_out) {
      *mask_out = wrap_mask(res.mask);
      (*mask_out)->g.geo = btd->g.geo;
    }
    if (passed_out) *passed_out = res.passed ? 1 : 0;
  });
}

ck_linearize_params ck_linearize_params_default(void) {
  const ck::linearize::LinearizeParams p;
  return {p.width_tol, p.min_component_px, p.angle_tol, p.lateral_tol, p.gap_tol};
}

ck_status ck_linearize(const ck_raster* prob, double threshold, const ck_linearize_params* params,
                       ck_segments** out) {
  return guard([&] {
    need(prob, "prob");
    need(out, "out");
    const auto p = to_cpp(params ? *params : ck_linearize_params_default());
    *out = new ck_segments{ck::linearize::linearize(prob->g.grid, threshold, p)};
  });
}

ck_status ck_segments_from_jsonl(const char* text, ck_segments** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    *out = new ck_segments{ck::linearize::from_jsonl(text)};
  });
}

ck_status ck_segments_load(const char* path, ck_segments** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new ck_segments{ck::linearize::from_jsonl(ck::io::read_file(path))};
  });
}

ck_status ck_segments_to_jsonl(const ck_segments* s, char** out) {
  return guard([&] {
    need(s, "segments");
    need(out, "out");
    *out = dup_string(ck::linearize::to_jsonl(s->s));
  });
}

size_t ck_segments_count(const ck_segments* s) { return s ? s->s.segments.size() : 0; }

ck_status ck_segments_get(const ck_segments* s, size_t i, ck_segment* out) {
  return guard([&] {
    need(s, "segments");
    need(out, "out");
    if (i >= s->s.segments.size()) throw ck::Error(ck::ErrorCode::kInvalidArgument, "segment index out of range");
    const auto& g = s->s.segments[i];
    *out = {g.p0.r, g.p0.c, g.p1.r, g.p1.c, g.angle(), g.length()};
  });
}

void ck_segments_free(ck_segments* s) { delete s; }

ck_match_params ck_match_params_default(void) {
  const ck::metrics::MatchParams p;
  return {p.angle_tol, p.dist_tol, p.km_per_pixel, p.sample_step, CK_MATCH_GREEDY, CK_DIST_PRED_TO_GT};
}

ck_status ck_eval_pixel(const ck_raster* const* preds, const ck_raster* const* gts, size_t n, int n_thresholds,
                        char** json_out) {
  return guard([&] {
    need(json_out, "json_out");
    if (n > 0) {
      need(preds, "preds");
      need(gts, "gts");
    }
    std::vector<ck::ProbabilityMask> p;
    std::vector<ck::BinaryMask> g;
    for (size_t i = 0; i < n; ++i) {
      need(preds[i], "pred raster");
      need(gts[i], "gt raster");
      p.push_back(preds[i]->g.grid);
      g.push_back(as_mask(gts[i]));
    }
    *json_out = dup_string(curve_json(ck::metrics::pixel_pr_curve(p, g, n_thresholds)).dump());
  });
}

ck_status ck_eval_contrail(const ck_raster* prob, const ck_segments* gt, const double* thresholds,
                           size_t n_thresholds, const ck_match_params* match, const ck_linearize_params* lin,
                           char** json_out) {
  return guard([&] {
    need(prob, "prob");
    need(gt, "gt");
    need(json_out, "json_out");
    if (n_thresholds > 0) need(thresholds, "thresholds");
    const auto mp = to_cpp(match ? *match : ck_match_params_default());
    const auto lp = to_cpp(lin ? *lin : ck_linearize_params_default());
    const auto curve = ck::metrics::contrail_pr_curve(
        prob->g.grid, gt->s, std::span<const double>(thresholds, n_thresholds), mp, lp);
    *json_out = dup_string(curve_json(curve).dump());
  });
}

ck_status ck_match(const ck_segments* pred, const ck_segments* gt, const ck_match_params* match, char** json_out) {
  return guard([&] {
    need(pred, "pred");
    need(gt, "gt");
    need(json_out, "json_out");
    const auto r = ck::metrics::match_contrails(pred->s, gt->s, to_cpp(match ? *match : ck_match_params_default()));
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [i, j] : r.pairs) pairs.push_back({i, j});
    const nlohmann::json j = {{"precision", r.precision},
                              {"recall", r.recall},
                              {"precision_degenerate", r.precision_degenerate},
                              {"recall_degenerate", r.recall_degenerate},
                              {"n_pred", r.n_pred},
                              {"n_gt", r.n_gt},
                              {"pairs", pairs}};
    *json_out = dup_string(j.dump());
  });
}

ck_status ck_eval_relaxed(const ck_raster* pred, const ck_raster* gt, double rho, double* precision,
                          double* recall) {
  return guard([&] {
    need(pred, "pred");
    need(gt, "gt");
    const auto r = ck::metrics::relaxed_pr(as_mask(pred), as_mask(gt), rho);
    if (precision) *precision = r.precision;
    if (recall) *recall = r.recall;
  });
}

ck_status ck_report_pixel(const char* pred_dir, const char* gt_dir, int n_thresholds, char** json_out) {
  return guard([&] {
    need(pred_dir, "pred_dir");
    need(gt_dir, "gt_dir");
    need(json_out, "json_out");
    *json_out = dup_string(ck::evaluate::pixel_report(pred_dir, gt_dir, n_thresholds));
  });
}

ck_status ck_report_contrail(const char* pred_dir, const char* gt_dir, int n_thresholds,
                             const ck_match_params* match, const ck_linearize_params* lin, char** json_out) {
  return guard([&] {
    need(pred_dir, "pred_dir");
    need(gt_dir, "gt_dir");
    need(json_out, "json_out");
    *json_out = dup_string(ck::evaluate::contrail_report(
        pred_dir, gt_dir, n_thresholds, to_cpp(match ? *match : ck_match_params_default()),
        to_cpp(lin ? *lin : ck_linearize_params_default())));
  });
}

ck_status ck_report_relaxed(const char* pred_dir, const char* gt_dir, double rho, double threshold,
                            char** json_out) {
  return guard([&] {
    need(pred_dir, "pred_dir");
    need(gt_dir, "gt_dir");
    need(json_out, "json_out");
    *json_out = dup_string(ck::evaluate::relaxed_report(pred_dir, gt_dir, rho, threshold));
  });
}

ck_status ck_aggregate_labels(const ck_raster* const* masks, size_t n, int quorum, ck_raster** out) {
  return guard([&] {
    need(out, "out");
    if (n > 0) need(masks, "masks");
    std::vector<ck::BinaryMask> m;
    for (size_t i = 0; i < n; ++i) {
      need(masks[i], "mask");
      m.push_back(as_mask(masks[i]));
    }
    *out = wrap_mask(ck::metrics::aggregate_labels(m, {static_cast<int>(n), quorum}));
  });
}

ck_status ck_sample(const char* features_csv, const char* policy_json, uint64_t seed, const char* out_csv,
                    size_t* n_in, size_t* n_kept) {
  return guard([&] {
    need(features_csv, "features_csv");
    need(out_csv, "out_csv");
    ck::sampler::KeepPolicy policy = policy_json ? ck::sampler::policy_from_json(policy_json)
                                                 : ck::sampler::KeepPolicy{};
    policy.rng_seed = seed;
    std::istringstream in(ck::io::read_file(features_csv));
    const auto rows = ck::sampler::read_features_csv(in);
    std::vector<ck::sampler::SceneFeatures> kept;
    for (const auto& f : rows)
      if (ck::sampler::decide_keep(f, policy)) kept.push_back(f);
    std::ostringstream out;
    ck::sampler::write_features_csv(out, kept);
    ck::io::write_file(out_csv, out.str());
    if (n_in) *n_in = rows.size();
    if (n_kept) *n_kept = kept.size();
  });
}

ck_status ck_coverage_report(const char* detections_dir, double threshold, const char* by, char** csv_out) {
  return guard([&] {
    need(detections_dir, "detections_dir");
    need(by, "by");
    need(csv_out, "csv_out");
    *csv_out = dup_string(
        ck::coverage::coverage_report_csv(detections_dir, threshold, ck::coverage::parse_stratum(by)));
  });
}

ck_status ck_coverage_fraction(const ck_raster* prob, double threshold, double* pct) {
  return guard([&] {
    need(prob, "prob");
    need(pct, "pct");
    *pct = ck::coverage::coverage_fraction(prob->g.grid, threshold);
  });
}

double ck_solar_zenith(double lat, double lon, double epoch_s) {
  return ck::coverage::solar_zenith(lat, lon, epoch_s);
}

double ck_local_hour(double utc_hour, double lon) { return ck::coverage::local_hour(utc_hour, lon); }

ck_density_params ck_density_params_default(void) {
  const ck::flightenv::DensityParams p;
  return {p.sigma0_px, p.growth_px_per_s, 4.0 * 3600.0, 60.0};
}

ck_status ck_parse_iso8601(const char* text, double* epoch_s) {
  return guard([&] {
    need(text, "text");
    need(epoch_s, "epoch_s");
    *epoch_s = ck::flightenv::parse_iso8601(text);
  });
}

ck_status ck_flight_density(const char* wind_path, const char* tracks_csv, double at, double lat, double lon,
                            int size, double pixel_m, const ck_density_params* params, ck_raster** density_out,
                            size_t* track_count) {
  return guard([&] {
    need(wind_path, "wind_path");
    need(tracks_csv, "tracks_csv");
    const ck_density_params p = params ? *params : ck_density_params_default();
    std::ifstream win(wind_path, std::ios::binary);
    if (!win) throw ck::Error(ck::ErrorCode::kIo, std::string("cannot open ") + wind_path);
    const auto wind = ck::flightenv::read_wind(win);
    std::istringstream tin(ck::io::read_file(tracks_csv));
    const auto flights = ck::flightenv::read_tracks_csv(tin);
    const auto tracks = ck::flightenv::advect_flights(flights, wind, p.duration_s, p.step_s);
    const auto patch = ck::utm::Patch::centered({lat, lon}, size, pixel_m);
    const auto pts = ck::flightenv::positions_at(tracks, at);
    const auto dens =
        ck::flightenv::render_density(pts, patch, {p.sigma0_px, p.growth_px_per_s, 5.0});
    if (track_count) *track_count = ck::flightenv::count_tracks_in_patch(tracks, patch);
    if (density_out) {
      auto r = std::make_unique<ck_raster>();
      r->g.grid = ck::Grid<float>(dens.width(), dens.height());
      for (std::size_t i = 0; i < dens.size(); ++i) r->g.grid[i] = static_cast<float>(dens[i]);
      *density_out = r.release();
    }
  });
}

ck_status ck_store_open(const char* root, ck_store** out) {
  return guard([&] {
    need(root, "root");
    need(out, "out");
    *out = new ck_store(root);
  });
}

void ck_store_free(ck_store* s) { delete s; }

ck_status ck_store_add_task(ck_store* s, const char* task_json, const char* const* frame_pngs,
                            const char* overlay_png) {
  return guard([&] {
    need(s, "store");
    need(task_json, "task_json");
    need(frame_pngs, "frame_pngs");
    ck::annotate::LabelingTask t;
    try {
      const auto j = nlohmann::json::parse(task_json);
      t.task_id = j.at("task_id").get<std::string>();
      t.frame_times = j.at("frame_times").get<std::vector<std::int64_t>>();
      t.labelers = j.value("labelers", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e) {
      throw ck::Error(ck::ErrorCode::kInvalidArgument, std::string("task JSON: ") + e.what());
    }
    std::vector<std::string> frames;
    for (int i = 0; i < ck::annotate::kFramesPerTask; ++i) {
      need(frame_pngs[i], "frame path");
      frames.push_back(ck::io::read_file(frame_pngs[i]));
    }
    std::optional<std::string> overlay;
    if (overlay_png) overlay = ck::io::read_file(overlay_png);
    s->store.add_task(t, frames, overlay);
  });
}

ck_status ck_store_serve(ck_store* s, const char* host, int port) {
  return guard([&] {
    need(s, "store");
    ck::annotate::serve(s->store, host ? host : "127.0.0.1", port);
  });
}

}  // extern "C"
