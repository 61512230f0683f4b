// Exercises the shared library through its C header only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "contrailkit/contrailkit.h"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RasterPtr {
  ck_raster* p = nullptr;
  ~RasterPtr() { ck_raster_free(p); }
};

struct SegmentsPtr {
  ck_segments* p = nullptr;
  ~SegmentsPtr() { ck_segments_free(p); }
};

json take_json(char* s) {
  REQUIRE(s != nullptr);
  const json j = json::parse(s);
  ck_string_free(s);
  return j;
}

fs::path scratch(const std::string& tag) {
  std::random_device rd;
  const fs::path p = fs::temp_directory_path() / ("ck_capi_" + tag + "_" + std::to_string(rd()));
  fs::create_directories(p);
  return p;
}

// A horizontal 1-px line with value v at row r on a w x h raster.
std::vector<float> line_values(int w, int h, int r, int c0, int c1, float v) {
  std::vector<float> out(static_cast<std::size_t>(w) * h, 0.0f);
  for (int c = c0; c < c1; ++c) out[static_cast<std::size_t>(r) * w + c] = v;
  return out;
}

}  // namespace

TEST_CASE("errors carry a status and a message") {
  CHECK(std::string(ck_version()).size() > 0);
  ck_raster* r = nullptr;
  CHECK(ck_raster_create(0, 4, nullptr, nullptr, &r) == CK_INVALID_ARGUMENT);
  CHECK(std::string(ck_last_error()).size() > 0);
  CHECK(r == nullptr);
  CHECK(ck_raster_load("/nonexistent/x.btg", &r) != CK_OK);
  CHECK(ck_raster_create(4, 4, nullptr, nullptr, nullptr) == CK_INVALID_ARGUMENT);
  double e = 0.0;
  CHECK(ck_parse_iso8601("2023-13-01T00:00:00Z", &e) == CK_INVALID_ARGUMENT);
  CHECK(ck_parse_iso8601("1970-01-02T00:00:00Z", &e) == CK_OK);
  CHECK(e == 86400.0);
  CHECK(std::string(ck_last_error()).empty());
}

TEST_CASE("raster round trip through a file") {
  const fs::path dir = scratch("raster");
  const std::vector<float> v{0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f};
  const std::vector<uint8_t> miss{0, 0, 1, 0, 0, 0};
  RasterPtr a, b;
  REQUIRE(ck_raster_create(3, 2, v.data(), miss.data(), &a.p) == CK_OK);
  REQUIRE(ck_raster_save(a.p, (dir / "a.btg").c_str()) == CK_OK);
  REQUIRE(ck_raster_load((dir / "a.btg").c_str(), &b.p) == CK_OK);
  CHECK(ck_raster_width(b.p) == 3);
  CHECK(ck_raster_height(b.p) == 2);
  for (int i = 0; i < 6; ++i) {
    CHECK(ck_raster_values(b.p)[i] == v[i]);
    CHECK(ck_raster_missing(b.p)[i] == miss[i]);
  }
  double pct = 0.0;
  REQUIRE(ck_coverage_fraction(b.p, 0.4, &pct) == CK_OK);
  CHECK(pct == doctest::Approx(60.0));
  fs::remove_all(dir);
}

TEST_CASE("linearize, match and evaluate") {
  const int w = 64, h = 64;
  const auto vals = line_values(w, h, 30, 10, 50, 0.9f);
  RasterPtr prob;
  REQUIRE(ck_raster_create(w, h, vals.data(), nullptr, &prob.p) == CK_OK);
  const ck_linearize_params lp = ck_linearize_params_default();
  SegmentsPtr segs;
  REQUIRE(ck_linearize(prob.p, 0.35, &lp, &segs.p) == CK_OK);
  REQUIRE(ck_segments_count(segs.p) == 1);
  ck_segment s{};
  REQUIRE(ck_segments_get(segs.p, 0, &s) == CK_OK);
  CHECK(std::fabs(s.angle_deg) <= 0.5);
  CHECK(s.length_px >= 39.0);
  CHECK(ck_segments_get(segs.p, 1, &s) == CK_INVALID_ARGUMENT);

  char* text = nullptr;
  REQUIRE(ck_segments_to_jsonl(segs.p, &text) == CK_OK);
  SegmentsPtr back;
  REQUIRE(ck_segments_from_jsonl(text, &back.p) == CK_OK);
  ck_string_free(text);
  CHECK(ck_segments_count(back.p) == 1);

  const ck_match_params mp = ck_match_params_default();
  char* out = nullptr;
  REQUIRE(ck_match(segs.p, back.p, &mp, &out) == CK_OK);
  json j = take_json(out);
  CHECK(j["precision"] == 1.0);
  CHECK(j["recall"] == 1.0);

  const double thr[] = {0.35, 0.95};
  REQUIRE(ck_eval_contrail(prob.p, back.p, thr, 2, &mp, &lp, &out) == CK_OK);
  j = take_json(out);
  CHECK(j["points"][0]["recall"] == 1.0);

  const auto gt_vals = line_values(w, h, 30, 10, 50, 1.0f);
  RasterPtr gt;
  REQUIRE(ck_raster_create(w, h, gt_vals.data(), nullptr, &gt.p) == CK_OK);
  const ck_raster* preds[] = {prob.p};
  const ck_raster* gts[] = {gt.p};
  REQUIRE(ck_eval_pixel(preds, gts, 1, 11, &out) == CK_OK);
  j = take_json(out);
  CHECK(j["auc"].get<double>() == doctest::Approx(1.0));
  double p = 0, r = 0;
  REQUIRE(ck_eval_relaxed(gt.p, gt.p, 0.0, &p, &r) == CK_OK);
  CHECK(p == 1.0);
  CHECK(r == 1.0);

  RasterPtr small;
  REQUIRE(ck_raster_create(4, 4, nullptr, nullptr, &small.p) == CK_OK);
  const ck_raster* bad[] = {small.p};
  CHECK(ck_eval_pixel(bad, gts, 1, 11, &out) == CK_SHAPE_MISMATCH);
}

TEST_CASE("detector and aggregation") {
  const int w = 96, h = 96;
  std::vector<float> bt11(static_cast<std::size_t>(w) * h, 250.0f), bt12 = bt11;
  for (int c = 10; c < 80; ++c) bt12[static_cast<std::size_t>(48) * w + c] = 247.0f;
  RasterPtr a, b, d, mask;
  REQUIRE(ck_raster_create(w, h, bt11.data(), nullptr, &a.p) == CK_OK);
  REQUIRE(ck_raster_create(w, h, bt12.data(), nullptr, &b.p) == CK_OK);
  REQUIRE(ck_btd(a.p, b.p, &d.p) == CK_OK);
  CHECK(ck_raster_values(d.p)[static_cast<std::size_t>(48) * w + 40] == doctest::Approx(3.0));
  ck_mannstein_params mp = ck_mannstein_params_default();
  CHECK(ck_mannstein_params_from_json("{\"kernel_len\": 19}", &mp) == CK_OK);
  CHECK(mp.kernel_len == 19);
  CHECK(ck_mannstein_params_from_json("{\"bogus\": 1}", &mp) == CK_INVALID_ARGUMENT);
  int passed = 0;
  REQUIRE(ck_mannstein_screen(d.p, &mp, &mask.p, &passed) == CK_OK);
  CHECK(passed == 1);

  std::vector<float> one(16, 0.0f), two(16, 0.0f);
  one[0] = one[1] = 1.0f;
  two[1] = 1.0f;
  RasterPtr m1, m2, agg;
  REQUIRE(ck_raster_create(4, 4, one.data(), nullptr, &m1.p) == CK_OK);
  REQUIRE(ck_raster_create(4, 4, two.data(), nullptr, &m2.p) == CK_OK);
  const ck_raster* ms[] = {m1.p, m2.p};
  REQUIRE(ck_aggregate_labels(ms, 2, 2, &agg.p) == CK_OK);
  CHECK(ck_raster_values(agg.p)[0] == 0.0f);
  CHECK(ck_raster_values(agg.p)[1] == 1.0f);
  CHECK(ck_aggregate_labels(ms, 2, 3, &agg.p) == CK_INVALID_ARGUMENT);
}

TEST_CASE("sampler, coverage helpers and store") {
  const fs::path dir = scratch("misc");
  std::ofstream(dir / "f.csv") << "scene_id,track_count,max_rhi,mannstein_passed\n"
                                  "a,50,120,1\nb,0,10,0\nc,20,95,1\n";
  std::size_t n_in = 0, n_kept = 0;
  REQUIRE(ck_sample((dir / "f.csv").c_str(), nullptr, 7, (dir / "k.csv").c_str(), &n_in, &n_kept) == CK_OK);
  CHECK(n_in == 3);
  CHECK(n_kept >= 2);
  CHECK(ck_sample((dir / "f.csv").c_str(), "{\"p_dry\": 3}", 7, (dir / "k.csv").c_str(), &n_in, &n_kept) ==
        CK_INVALID_ARGUMENT);

  CHECK(ck_local_hour(12.0, -90.0) == doctest::Approx(6.0));
  const double z = ck_solar_zenith(0.0, 0.0, 1679313600.0);  // 2023-03-20 12:00 UTC
  CHECK(z <= 2.0);

  ck_store* store = nullptr;
  REQUIRE(ck_store_open((dir / "store").c_str(), &store) == CK_OK);
  std::vector<std::string> frames;
  std::vector<const char*> frame_ptrs;
  for (int i = 0; i < 8; ++i) {
    frames.push_back((dir / ("f" + std::to_string(i) + ".png")).string());
    std::ofstream(frames.back()) << "png";
  }
  for (const auto& f : frames) frame_ptrs.push_back(f.c_str());
  const char* task = R"({"task_id": "t1", "frame_times": [0,1,2,3,4,5,6,7], "labelers": ["a"]})";
  CHECK(ck_store_add_task(store, task, frame_ptrs.data(), nullptr) == CK_OK);
  CHECK(ck_store_add_task(store, task, frame_ptrs.data(), nullptr) == CK_INVALID_ARGUMENT);
  CHECK(ck_store_add_task(store, "{\"task_id\": 3}", frame_ptrs.data(), nullptr) == CK_INVALID_ARGUMENT);
  ck_store_free(store);
  fs::remove_all(dir);
}
