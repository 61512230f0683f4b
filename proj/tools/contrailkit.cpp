// contrailkit command-line front end. Talks to the library only through the
// C interface.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "contrailkit/contrailkit.h"

namespace {

constexpr int kExitError = 2;

struct Failure {
  ck_status status;
};

void check(ck_status s) {
  if (s != CK_OK) throw Failure{s};
}

struct RasterDel {
  void operator()(ck_raster* r) const { ck_raster_free(r); }
};
struct SegDel {
  void operator()(ck_segments* s) const { ck_segments_free(s); }
};
struct StoreDel {
  void operator()(ck_store* s) const { ck_store_free(s); }
};
using Raster = std::unique_ptr<ck_raster, RasterDel>;
using Segments = std::unique_ptr<ck_segments, SegDel>;
using Store = std::unique_ptr<ck_store, StoreDel>;

Raster load(const std::string& path) {
  ck_raster* r = nullptr;
  check(ck_raster_load(path.c_str(), &r));
  return Raster(r);
}

// Takes ownership of a malloc'd string from the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  ck_string_free(s);
  return out;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  f << text;
  if (!f) {
    std::cerr << "error: cannot write " << out_path << "\n";
    throw Failure{CK_IO};
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contrailkit: contrail imagery, screening and evaluation tools"};
  app.require_subcommand(1);
  int exit_code = 0;

  // ash
  auto* ash = app.add_subcommand("ash", "Render an ash false-colour PNG from 12, 11 and 8 um rasters");
  std::string a12, a11, a8, ash_out;
  ash->add_option("--bt12", a12)->required();
  ash->add_option("--bt11", a11)->required();
  ash->add_option("--bt8", a8)->required();
  ash->add_option("--out", ash_out)->required();
  ash->callback([&] {
    const auto r12 = load(a12), r11 = load(a11), r8 = load(a8);
    check(ck_render_ash_png(r12.get(), r11.get(), r8.get(), nullptr, ash_out.c_str()));
  });

  // screen
  auto* screen = app.add_subcommand("screen", "Line-contrail screen; exit 0 when the scene passes, 1 otherwise");
  std::string s_btd, s11, s12, s_mask, s_params;
  auto mp = ck_mannstein_params_default();
  screen->add_option("--input,--btd", s_btd, "11-12 um difference raster");
  screen->add_option("--bt11", s11);
  screen->add_option("--bt12", s12);
  screen->add_option("--params", s_params, "JSON file with screen parameters");
  screen->add_option("--out-mask", s_mask);
  screen->add_option("--btd-threshold", mp.btd_threshold)->capture_default_str();
  screen->add_option("--response-threshold", mp.response_threshold)->capture_default_str();
  screen->add_option("--min-component", mp.min_component_px)->capture_default_str();
  screen->add_option("--kernel-len", mp.kernel_len)->capture_default_str();
  screen->add_option("--orientations", mp.n_orientations)->capture_default_str();
  screen->callback([&] {
    if (!s_params.empty()) {
      std::ifstream f(s_params);
      if (!f) throw CLI::ValidationError("--params", "cannot read " + s_params);
      const std::string text((std::istreambuf_iterator<char>(f)), {});
      check(ck_mannstein_params_from_json(text.c_str(), &mp));
    }
    Raster btd;
    if (!s_btd.empty()) {
      btd = load(s_btd);
    } else if (!s11.empty() && !s12.empty()) {
      ck_raster* d = nullptr;
      const auto r11 = load(s11), r12 = load(s12);
      check(ck_btd(r11.get(), r12.get(), &d));
      btd.reset(d);
    } else {
      throw CLI::ValidationError("screen", "give --input or both --bt11 and --bt12");
    }
    ck_raster* mask = nullptr;
    int passed = 0;
    check(ck_mannstein_screen(btd.get(), &mp, &mask, &passed));
    Raster m(mask);
    if (!s_mask.empty()) check(ck_raster_save(m.get(), s_mask.c_str()));
    std::cout << (passed ? "pass" : "fail") << "\n";
    exit_code = passed ? 0 : 1;
  });

  // linearize
  auto* lin = app.add_subcommand("linearize", "Threshold a probability raster into line segments (JSONL)");
  std::string l_prob, l_out = "-";
  double l_thr = 0.35;
  auto lp = ck_linearize_params_default();
  lin->add_option("--mask,--prob", l_prob, "probability raster")->required();
  lin->add_option("--threshold", l_thr)->capture_default_str();
  lin->add_option("--out", l_out)->capture_default_str();
  lin->add_option("--width-tol", lp.width_tol)->capture_default_str();
  lin->add_option("--angle-tol", lp.angle_tol)->capture_default_str();
  lin->add_option("--lateral-tol", lp.lateral_tol)->capture_default_str();
  lin->add_option("--gap-tol", lp.gap_tol)->capture_default_str();
  lin->add_option("--min-component", lp.min_component_px)->capture_default_str();
  lin->callback([&] {
    const auto prob = load(l_prob);
    ck_segments* s = nullptr;
    check(ck_linearize(prob.get(), l_thr, &lp, &s));
    Segments segs(s);
    char* text = nullptr;
    check(ck_segments_to_jsonl(segs.get(), &text));
    emit(take(text), l_out);
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluation reports over prediction and ground-truth directories");
  eval->require_subcommand(1);
  eval->fallthrough();
  std::string e_pred, e_gt, e_out = "-";
  eval->add_option("--pred", e_pred, "directory of .btg probability rasters")->required();
  eval->add_option("--gt", e_gt, "directory of ground truth with matching file stems")->required();
  eval->add_option("--report,--out", e_out, "JSON report path")->capture_default_str();

  auto* ev_pix = eval->add_subcommand("pixel", "Pooled pixel PR curve and AUC");
  int ep_n = 10000;
  ev_pix->add_option("--thresholds", ep_n)->capture_default_str();
  ev_pix->callback([&] {
    char* json = nullptr;
    check(ck_report_pixel(e_pred.c_str(), e_gt.c_str(), ep_n, &json));
    emit(take(json), e_out);
  });

  auto* ev_con = eval->add_subcommand("contrail", "Per-contrail PR after linearization and matching");
  std::string ec_mode = "greedy", ec_dist = "pred-to-gt";
  int ec_n = 11;
  auto mparams = ck_match_params_default();
  ev_con->add_option("--thresholds", ec_n)->capture_default_str();
  ev_con->add_option("--mode", ec_mode)->check(CLI::IsMember({"greedy", "optimal"}))->capture_default_str();
  ev_con->add_option("--distance", ec_dist)->check(CLI::IsMember({"pred-to-gt", "symmetric"}))->capture_default_str();
  ev_con->add_option("--angle-tol", mparams.angle_tol_deg)->capture_default_str();
  ev_con->add_option("--dist-tol-km", mparams.dist_tol_km)->capture_default_str();
  ev_con->add_option("--km-per-pixel", mparams.km_per_pixel)->capture_default_str();
  ev_con->callback([&] {
    mparams.mode = ec_mode == "optimal" ? CK_MATCH_OPTIMAL : CK_MATCH_GREEDY;
    mparams.distance = ec_dist == "symmetric" ? CK_DIST_SYMMETRIC : CK_DIST_PRED_TO_GT;
    char* json = nullptr;
    check(ck_report_contrail(e_pred.c_str(), e_gt.c_str(), ec_n, &mparams, nullptr, &json));
    emit(take(json), e_out);
  });

  auto* ev_rel = eval->add_subcommand("relaxed", "Relaxed precision/recall within rho pixels");
  double er_rho = 2.0, er_thr = 0.5;
  ev_rel->add_option("--rho", er_rho)->capture_default_str();
  ev_rel->add_option("--threshold", er_thr, "binarization of the predictions")->capture_default_str();
  ev_rel->callback([&] {
    char* json = nullptr;
    check(ck_report_relaxed(e_pred.c_str(), e_gt.c_str(), er_rho, er_thr, &json));
    emit(take(json), e_out);
  });

  // sample
  auto* sample = app.add_subcommand("sample", "Deterministic keep/drop sampling of scenes");
  std::string sm_features, sm_policy, sm_out;
  std::uint64_t sm_seed = 0;
  sample->add_option("--features", sm_features, "CSV scene_id,track_count,max_rhi,mannstein_passed")->required();
  sample->add_option("--policy", sm_policy, "JSON policy file");
  sample->add_option("--seed", sm_seed)->capture_default_str();
  sample->add_option("--out", sm_out)->required();
  sample->callback([&] {
    std::string policy_text;
    if (!sm_policy.empty()) {
      std::ifstream f(sm_policy);
      if (!f) throw CLI::ValidationError("--policy", "cannot read " + sm_policy);
      policy_text.assign(std::istreambuf_iterator<char>(f), {});
    }
    std::size_t n_in = 0, n_kept = 0;
    check(ck_sample(sm_features.c_str(), sm_policy.empty() ? nullptr : policy_text.c_str(), sm_seed,
                    sm_out.c_str(), &n_in, &n_kept));
    std::cerr << "kept " << n_kept << " of " << n_in << " scenes\n";
  });

  // coverage
  auto* cov = app.add_subcommand("coverage", "Coverage and stratified reports over a detections directory");
  std::string cv_dir, cv_by = "hour", cv_out = "-";
  double cv_thr = 0.4;
  cov->add_option("--detections", cv_dir, "directory with index.csv")->required();
  cov->add_option("--threshold", cv_thr)->capture_default_str();
  cov->add_option("--by", cv_by)->check(CLI::IsMember({"hour", "doy", "gridbox", "zenith", "cloud"}))->capture_default_str();
  cov->add_option("--out", cv_out)->capture_default_str();
  cov->callback([&] {
    char* csv = nullptr;
    check(ck_coverage_report(cv_dir.c_str(), cv_thr, cv_by.c_str(), &csv));
    emit(take(csv), cv_out);
  });

  // density
  auto* dens = app.add_subcommand("density", "Advected flight density for one patch");
  std::string dn_wind, dn_tracks, dn_time, dn_out;
  double dn_lat = 0, dn_lon = 0, dn_pixel = 2000.0;
  int dn_size = 281;
  auto dp = ck_density_params_default();
  dens->add_option("--wind", dn_wind)->required();
  dens->add_option("--tracks", dn_tracks)->required();
  dens->add_option("--time", dn_time, "ISO-8601 UTC")->required();
  dens->add_option("--lat", dn_lat)->required();
  dens->add_option("--lon", dn_lon)->required();
  dens->add_option("--size", dn_size)->capture_default_str();
  dens->add_option("--pixel-m", dn_pixel)->capture_default_str();
  dens->add_option("--sigma0", dp.sigma0_px)->capture_default_str();
  dens->add_option("--growth", dp.growth_px_per_s, "px per second of age")->capture_default_str();
  dens->add_option("--duration", dp.duration_s)->capture_default_str();
  dens->add_option("--step", dp.step_s)->capture_default_str();
  dens->add_option("--out", dn_out)->required();
  dens->callback([&] {
    double at = 0;
    check(ck_parse_iso8601(dn_time.c_str(), &at));
    ck_raster* r = nullptr;
    std::size_t count = 0;
    check(ck_flight_density(dn_wind.c_str(), dn_tracks.c_str(), at, dn_lat, dn_lon, dn_size, dn_pixel, &dp, &r,
                            &count));
    Raster d(r);
    check(ck_raster_save(d.get(), dn_out.c_str()));
    std::cout << "tracks_in_patch " << count << "\n";
  });

  // records
  auto* rec = app.add_subcommand("records", "Record-file utilities");
  rec->require_subcommand(1);
  auto* verify = rec->add_subcommand("verify", "Check framing and checksums, print a summary");
  std::string rv_path;
  verify->add_option("path", rv_path)->required();
  verify->callback([&] {
    char* json = nullptr;
    check(ck_records_verify(rv_path.c_str(), &json));
    emit(take(json), "-");
  });

  // annotate
  auto* ann = app.add_subcommand("annotate", "Annotation service");
  ann->require_subcommand(1);
  ann->fallthrough();
  std::string an_root = "annotations";
  ann->add_option("--root", an_root, "store directory")->capture_default_str();

  auto* serve = ann->add_subcommand("serve", "Serve the HTTP API");
  std::string sv_host = "127.0.0.1";
  int sv_port = 8080;
  serve->add_option("--host", sv_host)->capture_default_str();
  serve->add_option("--port", sv_port)->capture_default_str();
  serve->callback([&] {
    ck_store* s = nullptr;
    check(ck_store_open(an_root.c_str(), &s));
    Store store(s);
    std::cerr << "serving " << an_root << " on http://" << sv_host << ":" << sv_port << "\n";
    check(ck_store_serve(store.get(), sv_host.c_str(), sv_port));
  });

  auto* add = ann->add_subcommand("add-task", "Register a labeling task");
  std::string at_json, at_overlay;
  std::vector<std::string> at_frames;
  add->add_option("--task", at_json, "task JSON file")->required();
  add->add_option("--frames", at_frames, "eight PNGs in time order")->required()->expected(8);
  add->add_option("--overlay", at_overlay, "flight-density PNG");
  add->callback([&] {
    std::ifstream f(at_json);
    if (!f) throw CLI::ValidationError("--task", "cannot read " + at_json);
    const std::string text((std::istreambuf_iterator<char>(f)), {});
    ck_store* s = nullptr;
    check(ck_store_open(an_root.c_str(), &s));
    Store store(s);
    std::vector<const char*> frames;
    for (const auto& p : at_frames) frames.push_back(p.c_str());
    check(ck_store_add_task(store.get(), text.c_str(), frames.data(),
                            at_overlay.empty() ? nullptr : at_overlay.c_str()));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitError;
  } catch (const Failure& f) {
    std::cerr << "error (" << static_cast<int>(f.status) << "): " << ck_last_error() << "\n";
    return kExitError;
  }
  return exit_code;
}
