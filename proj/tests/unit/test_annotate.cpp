#include <random>
#include <thread>

#include "annotate.hpp"
#include "doctest.h"
#include "httplib.h"
#include "ingest.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "server.hpp"
#include "support.hpp"

using namespace ck;
using namespace ck::annotate;
using nlohmann::json;

namespace {

Polygon rect(double r0, double c0, double r1, double c1) { return {{r0, c0}, {r0, c1}, {r1, c1}, {r1, c0}}; }

LabelingTask make_task(const std::string& id, std::vector<std::string> labelers = {"a", "b", "c", "d"}) {
  LabelingTask t;
  t.task_id = id;
  for (int i = 0; i < kFramesPerTask; ++i) t.frame_times.push_back(1682935200 + 600 * i);
  t.labelers = std::move(labelers);
  return t;
}

std::vector<std::string> fake_frames() {
  std::vector<std::string> out;
  for (int i = 0; i < kFramesPerTask; ++i) out.push_back("png-bytes-" + std::to_string(i));
  return out;
}

json polygon_body(const std::string& labeler, const std::vector<Polygon>& polys) {
  json p = json::array();
  for (const auto& poly : polys) {
    json jp = json::array();
    for (const auto& v : poly) jp.push_back({v.r, v.c});
    p.push_back(jp);
  }
  return {{"labeler_id", labeler}, {"polygons", p}};
}

// Runs the HTTP service on a free loopback port for the lifetime of the object.
class LiveServer {
 public:
  explicit LiveServer(Store& store) : srv_(make_server(store)) {
    port_ = srv_->bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { srv_->listen_after_bind(); });
    srv_->wait_until_ready();
  }
  ~LiveServer() {
    srv_->stop();
    thread_.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }

 private:
  std::unique_ptr<httplib::Server> srv_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_SUITE("annotate") {

TEST_CASE("rasterize") {
  const auto m = rasterize({rect(1.5, 1.5, 5.5, 9.5)}, 16, 16);
  CHECK(count_positive(m) == 32);
  CHECK(m.at(2, 2) == 1);
  CHECK(m.at(5, 9) == 1);
  CHECK(m.at(1, 2) == 0);
  CHECK(m.at(2, 10) == 0);

  Polygon rev = rect(1.5, 1.5, 5.5, 9.5);
  std::reverse(rev.begin(), rev.end());
  CHECK(rasterize({rev}, 16, 16) == m);

  // Disjoint triangles add up; translation by whole pixels shifts the mask.
  const Polygon t1{{0.5, 0.5}, {6.5, 0.5}, {0.5, 6.5}};
  const Polygon t2{{10.2, 10.2}, {15.4, 10.2}, {10.2, 14.9}};
  const auto a = rasterize({t1}, 16, 16), b = rasterize({t2}, 16, 16);
  CHECK(count_positive(rasterize({t1, t2}, 16, 16)) == count_positive(a) + count_positive(b));
  Polygon moved = t1;
  for (auto& v : moved) v = v + Point{3, 4};
  const auto s = rasterize({moved}, 16, 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) REQUIRE(s.at(r, c) == (r >= 3 && c >= 4 ? a.at(r - 3, c - 4) : 0));

  int skipped = 0;
  const auto degenerate = rasterize({{{1, 1}, {1, 1}, {4, 4}}, rect(0, 0, 2, 2)}, 8, 8, &skipped);
  CHECK(skipped == 1);
  CHECK(count_positive(degenerate) == 4);
}

TEST_CASE("rasterize against a centre test") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-2, 22);
  for (int t = 0; t < 100; ++t) {
    Polygon poly;
    for (int k = 0; k < 3 + static_cast<int>(rng() % 5); ++k) poly.push_back({u(rng), u(rng)});
    const auto m = rasterize({poly}, 20, 20);
    for (int r = 0; r < 20; ++r)
      for (int c = 0; c < 20; ++c)
        REQUIRE((m.at(r, c) != 0) == point_in_polygon(poly, {double(r), double(c)}));
  }
}

TEST_CASE("guideline examples") {
  BinaryMask blob(16, 16);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) blob.at(r, c) = 1;
  auto rep = guideline_check(blob);
  REQUIRE(rep.size() == 1);
  CHECK(rep[0].pixels == 9);
  CHECK_FALSE(rep[0].min_pixels_ok);

  BinaryMask line(40, 4);
  for (int c = 0; c < 30; ++c) line.at(1, c) = 1;
  rep = guideline_check(line);
  REQUIRE(rep.size() == 1);
  CHECK(rep[0].min_pixels_ok);
  CHECK(rep[0].aspect_ok);

  BinaryMask square(8, 8);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) square.at(r, c) = 1;
  rep = guideline_check(square);
  REQUIRE(rep.size() == 1);
  CHECK(rep[0].min_pixels_ok);
  CHECK_FALSE(rep[0].aspect_ok);

  BinaryMask two(40, 10);
  two.at(0, 0) = 1;
  for (int c = 5; c < 30; ++c) two.at(8, c) = 1;
  CHECK(guideline_check(two).size() == 2);
}

TEST_CASE("submission parsing") {
  const auto a = parse_submission("t1", polygon_body("ann-1", {rect(-1, -1, 281, 281)}).dump());
  CHECK(a.labeler_id == "ann-1");
  CHECK(a.polygons.size() == 1);

  auto field_of = [](const std::string& body) -> std::string {
    try {
      parse_submission("t1", body);
    } catch (const ValidationError& e) {
      return e.path();
    }
    return "";
  };
  CHECK(field_of("not json") == "$");
  CHECK(field_of("[]") == "$");
  CHECK(field_of(R"({"polygons": []})") == "labeler_id");
  CHECK(field_of(R"({"labeler_id": "a/b", "polygons": []})") == "labeler_id");
  CHECK(field_of(R"({"labeler_id": "a"})") == "polygons");
  CHECK(field_of(R"({"labeler_id": "a", "polygons": [[[0,0],[1,1]]]})") == "polygons[0]");
  CHECK(field_of(R"({"labeler_id": "a", "polygons": [[[0,0],[1,1],[2]]]})") == "polygons[0][2]");
  CHECK(field_of(R"({"labeler_id": "a", "polygons": [[[0,0],[1,"x"],[2,2]]]})") == "polygons[0][1][1]");
  CHECK(field_of(R"({"labeler_id": "a", "polygons": [[[0,0],[1,1],[2,2]], [[0,0],[282,1],[2,2]]]})") ==
        "polygons[1][1][0]");
  CHECK(field_of(R"({"labeler_id": "a", "polygons": [[[0,0],[1,-1.5],[2,2]]]})") == "polygons[0][1][1]");

  PolygonAnnotation full = a;
  full.task_id = "t1";
  full.version = 3;
  full.submitted_at = "2023-05-01T10:00:00Z";
  CHECK(annotation_from_json(annotation_to_json(full)) == full);
  CHECK_THROWS_AS(annotation_from_json("{\"task_id\": 1}"), Error);
}

TEST_CASE("store versions and aggregation") {
  test::TempDir dir("store");
  Store store(dir.path());
  store.add_task(make_task("t1"), fake_frames(), std::string("overlay"));
  CHECK_THROWS_AS(store.add_task(make_task("t1"), fake_frames()), Error);
  CHECK_THROWS_AS(store.add_task(make_task("../x"), fake_frames()), Error);
  auto short_task = make_task("t2");
  short_task.frame_times.pop_back();
  CHECK_THROWS_AS(store.add_task(short_task, fake_frames()), Error);
  CHECK(store.task_ids() == std::vector<std::string>{"t1"});
  CHECK(store.has_overlay("t1"));
  CHECK(store.frame_png(Store::frame_id("t1", 3)) == "png-bytes-3");
  CHECK_FALSE(store.frame_png("nope").has_value());
  CHECK_FALSE(store.task("missing").has_value());

  CHECK_THROWS_AS(store.aggregate("t1", 1), Error);
  const Polygon common = rect(20, 20, 30, 60);
  for (const char* who : {"a", "b", "c"}) {
    PolygonAnnotation p;
    p.task_id = "t1";
    p.labeler_id = who;
    p.polygons = {rect(100, 100, 101, 101)};
    CHECK(store.submit(p).version == 1);
    p.polygons = {common};
    CHECK(store.submit(p).version == 2);
  }
  PolygonAnnotation d;
  d.task_id = "t1";
  d.labeler_id = "d";
  d.polygons = {rect(150, 150, 160, 200), rect(0, 0, 5, 5)};
  CHECK(store.submit(d).version == 1);
  CHECK(store.annotations("t1").size() == 7);
  CHECK(store.annotations("t1", std::string("a")).size() == 2);
  CHECK(store.latest("t1").size() == 4);

  // Reopening the store sees the same history.
  Store again(dir.path());
  CHECK(again.annotations("t1") == store.annotations("t1"));

  const auto agg = store.aggregate("t1", 3);
  CHECK(agg.labelers == std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(agg.mask.width() == 256);
  // Centres on the bottom and right edges are outside (half-open rule).
  CHECK(count_positive(agg.mask) == 10 * 40);
  CHECK(agg.mask.at(20 - 12, 20 - 12) == 1);
  REQUIRE(agg.margin_polygons.size() == 1);
  CHECK(agg.margin_polygons[0].labeler_id == "d");
  CHECK(agg.margin_polygons[0].index == 1);

  std::vector<BinaryMask> crops;
  for (const auto& a : store.latest("t1")) crops.push_back(ingest::center_crop(rasterize(a.polygons, 281, 281)));
  for (int q = 1; q <= 4; ++q) CHECK(store.aggregate("t1", q).mask == oracle::quorum(crops, q));
  CHECK_THROWS_AS(store.aggregate("t1", 5), Error);
  CHECK_THROWS_AS(store.aggregate("t1", 0), Error);
}

TEST_CASE("http service") {
  test::TempDir dir("http");
  Store store(dir.path());
  store.add_task(make_task("task-1"), fake_frames());
  LiveServer live(store);
  auto cli = live.client();

  auto res = cli.Get("/tasks");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["tasks"] == json::array({"task-1"}));

  res = cli.Get("/tasks/task-1");
  REQUIRE(res);
  CHECK(res->status == 200);
  const json task = json::parse(res->body);
  CHECK(task["frames"].size() == 8);
  CHECK(task["target_index"] == 5);
  CHECK(task["frame_size"] == 281);
  CHECK(task["overlay_url"].is_null());
  CHECK(task["guidelines"].size() == 4);

  res = cli.Get(task["frames"][2]["url"].get<std::string>());
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == "png-bytes-2");
  CHECK(res->get_header_value("Content-Type") == "image/png");

  res = cli.Get("/tasks/nope");
  REQUIRE(res);
  CHECK(res->status == 404);
  res = cli.Post("/tasks/nope/annotations", polygon_body("a", {}).dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 404);
  res = cli.Get("/frames/nope.png");
  REQUIRE(res);
  CHECK(res->status == 404);

  res = cli.Post("/tasks/task-1/annotations", R"({"labeler_id": "a", "polygons": [[[0,0],[1,400],[2,2]]]})",
                 "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  CHECK(json::parse(res->body)["field"] == "polygons[0][1][1]");

  res = cli.Post("/tasks/task-1/aggregate", R"({"quorum": 1})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 409);

  const Polygon common = rect(40, 40, 44, 80);
  for (const char* who : {"a", "b", "c"}) {
    res = cli.Post("/tasks/task-1/annotations", polygon_body(who, {common}).dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    const json j = json::parse(res->body);
    CHECK(j["version"] == 1);
    CHECK(j["guidelines"][0]["pixels"] == 4 * 40);
    CHECK(j["guidelines"][0]["aspect_ok"] == true);
  }
  res = cli.Post("/tasks/task-1/annotations", polygon_body("d", {rect(100, 100, 102, 102)}).dump(),
                 "application/json");
  REQUIRE(res);
  CHECK(json::parse(res->body)["guidelines"][0]["min_pixels_ok"] == false);
  res = cli.Post("/tasks/task-1/annotations", polygon_body("d", {rect(200, 40, 210, 90)}).dump(),
                 "application/json");
  REQUIRE(res);
  CHECK(json::parse(res->body)["version"] == 2);

  res = cli.Get("/tasks/task-1/annotations?labeler=d");
  REQUIRE(res);
  json hist = json::parse(res->body);
  CHECK(hist["annotations"].size() == 2);
  CHECK(hist["latest_versions"] == json{{"d", 2}});
  res = cli.Get("/tasks/task-1/annotations");
  REQUIRE(res);
  hist = json::parse(res->body);
  CHECK(hist["annotations"].size() == 5);
  CHECK(hist["latest_versions"].size() == 4);

  res = cli.Post("/tasks/task-1/aggregate", R"({"quorum": 3})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  const json agg = json::parse(res->body);
  CHECK(agg["quorum"] == 3);
  CHECK(agg["labelers"].size() == 4);
  CHECK(agg["width"] == 256);
  CHECK(agg["positive_count"] == 4 * 40);
  CHECK(agg["positive_pixels"][0] == json::array({40 - 12, 40 - 12}));

  res = cli.Post("/tasks/task-1/aggregate", R"({"quorum": 9})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  res = cli.Post("/tasks/task-1/aggregate", R"({"quorum": "3"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  CHECK(json::parse(res->body)["field"] == "quorum");
}

}  // TEST_SUITE
