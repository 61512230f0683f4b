#include "annotate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "flightenv.hpp"
#include "ingest.hpp"
#include "json.hpp"
#include "raster_io.hpp"

namespace ck::annotate {
namespace fs = std::filesystem;
using nlohmann::json;

bool point_in_polygon(const Polygon& poly, Point p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point a = poly[j], b = poly[i];
    if ((a.r > p.r) != (b.r > p.r)) {
      const double c = a.c + (p.r - a.r) * (b.c - a.c) / (b.r - a.r);
      if (p.c < c) inside = !inside;
    }
  }
  return inside;
}

namespace {

std::size_t distinct_vertices(const Polygon& poly) {
  std::vector<std::pair<double, double>> v;
  for (const auto& p : poly) v.emplace_back(p.r, p.c);
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

void fill_polygon(const Polygon& poly, BinaryMask& out) {
  double rmin = poly[0].r, rmax = rmin, cmin = poly[0].c, cmax = cmin;
  for (const auto& p : poly) {
    rmin = std::min(rmin, p.r);
    rmax = std::max(rmax, p.r);
    cmin = std::min(cmin, p.c);
    cmax = std::max(cmax, p.c);
  }
  const int r0 = std::max(0, static_cast<int>(std::ceil(rmin)));
  const int r1 = std::min(out.height() - 1, static_cast<int>(std::floor(rmax)));
  const int c0 = std::max(0, static_cast<int>(std::ceil(cmin)));
  const int c1 = std::min(out.width() - 1, static_cast<int>(std::floor(cmax)));
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c)
      if (point_in_polygon(poly, {static_cast<double>(r), static_cast<double>(c)})) out.at(r, c) = 1;
}

}  // namespace

BinaryMask rasterize(const std::vector<Polygon>& polygons, int width, int height, int* skipped) {
  BinaryMask out(width, height);
  int bad = 0;
  for (const auto& poly : polygons) {
    if (distinct_vertices(poly) < 3) {
      ++bad;
      continue;
    }
    fill_polygon(poly, out);
  }
  if (skipped) *skipped = bad;
  return out;
}

ComponentReport describe_pixels(const std::vector<Pixel>& px) {
  ComponentReport rep;
  rep.pixels = px.size();
  if (!px.empty()) {
    const auto pts = to_points(px);
    const AxisFit f = fit_axis(pts);
    rep.major_extent = f.t_max - f.t_min + 1.0;
    rep.minor_extent = f.s_max - f.s_min + 1.0;
  }
  rep.min_pixels_ok = rep.pixels >= kMinContrailPixels;
  rep.aspect_ok = rep.pixels > 0 && rep.major_extent >= kMinAspect * rep.minor_extent;
  return rep;
}

std::vector<ComponentReport> guideline_check(const BinaryMask& mask) {
  std::vector<ComponentReport> out;
  for (const auto& comp : connected_components(mask)) out.push_back(describe_pixels(comp));
  return out;
}

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 128 || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char ch) {
    return std::isalnum(ch) || ch == '-' || ch == '_' || ch == '.';
  });
}

void LabelingTask::validate() const {
  if (!valid_id(task_id)) throw Error(ErrorCode::kInvalidArgument, "task id must match [A-Za-z0-9._-]+");
  if (frame_times.size() != kFramesPerTask)
    throw Error(ErrorCode::kInvalidArgument, "task " + task_id + ": expected 8 frame timestamps");
  for (std::size_t i = 1; i < frame_times.size(); ++i)
    if (frame_times[i] <= frame_times[i - 1])
      throw Error(ErrorCode::kInvalidArgument, "task " + task_id + ": frame timestamps must increase");
}

// ---- wire format ----

PolygonAnnotation parse_submission(const std::string& task_id, const std::string& body, int frame_side) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ValidationError("$", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("$", "expected an object");
  PolygonAnnotation a;
  a.task_id = task_id;
  if (!j.contains("labeler_id") || !j["labeler_id"].is_string())
    throw ValidationError("labeler_id", "expected a string");
  a.labeler_id = j["labeler_id"].get<std::string>();
  if (!valid_id(a.labeler_id)) throw ValidationError("labeler_id", "must match [A-Za-z0-9._-]+");
  if (!j.contains("polygons") || !j["polygons"].is_array()) throw ValidationError("polygons", "expected an array");
  const auto& polys = j["polygons"];
  const double lo = -1.0, hi = frame_side;  // image bounds plus one pixel
  for (std::size_t i = 0; i < polys.size(); ++i) {
    const std::string pp = "polygons[" + std::to_string(i) + "]";
    if (!polys[i].is_array()) throw ValidationError(pp, "expected an array of vertices");
    if (polys[i].size() < 3) throw ValidationError(pp, "a polygon needs at least 3 vertices");
    Polygon poly;
    for (std::size_t k = 0; k < polys[i].size(); ++k) {
      const auto& v = polys[i][k];
      const std::string vp = pp + "[" + std::to_string(k) + "]";
      if (!v.is_array() || v.size() != 2) throw ValidationError(vp, "expected [row, col]");
      for (int d = 0; d < 2; ++d)
        if (!v[d].is_number()) throw ValidationError(vp + "[" + std::to_string(d) + "]", "expected a number");
      const Point p{v[0].get<double>(), v[1].get<double>()};
      if (!std::isfinite(p.r) || p.r < lo || p.r > hi)
        throw ValidationError(vp + "[0]", "row outside the frame");
      if (!std::isfinite(p.c) || p.c < lo || p.c > hi)
        throw ValidationError(vp + "[1]", "col outside the frame");
      poly.push_back(p);
    }
    a.polygons.push_back(std::move(poly));
  }
  return a;
}

namespace {

json polygons_json(const std::vector<Polygon>& polys) {
  json out = json::array();
  for (const auto& poly : polys) {
    json jp = json::array();
    for (const auto& p : poly) jp.push_back({p.r, p.c});
    out.push_back(std::move(jp));
  }
  return out;
}

json annotation_json(const PolygonAnnotation& a) {
  return {{"task_id", a.task_id},
          {"labeler_id", a.labeler_id},
          {"version", a.version},
          {"submitted_at", a.submitted_at},
          {"polygons", polygons_json(a.polygons)}};
}

PolygonAnnotation annotation_from(const json& j) {
  PolygonAnnotation a;
  a.task_id = j.at("task_id").get<std::string>();
  a.labeler_id = j.at("labeler_id").get<std::string>();
  a.version = j.at("version").get<int>();
  a.submitted_at = j.at("submitted_at").get<std::string>();
  for (const auto& jp : j.at("polygons")) {
    Polygon poly;
    for (const auto& v : jp) poly.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    a.polygons.push_back(std::move(poly));
  }
  return a;
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  return flightenv::format_iso8601(
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string annotation_to_json(const PolygonAnnotation& a) { return annotation_json(a).dump(); }

PolygonAnnotation annotation_from_json(const std::string& line) {
  try {
    return annotation_from(json::parse(line));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptRecord, std::string("annotation log: ") + e.what());
  }
}

// ---- store ----

Store::Store(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "frames");
  fs::create_directories(root_ / "tasks");
}

fs::path Store::task_dir(const std::string& task_id) const {
  return root_ / "tasks" / hex64(fnv1a64(task_id));
}

std::string Store::frame_id(const std::string& task_id, int index) {
  return task_id + "-f" + std::to_string(index);
}

std::string Store::overlay_id(const std::string& task_id) { return task_id + "-density"; }

void Store::add_task(const LabelingTask& task, const std::vector<std::string>& frame_pngs,
                     const std::optional<std::string>& overlay_png) {
  task.validate();
  if (frame_pngs.size() != kFramesPerTask)
    throw Error(ErrorCode::kInvalidArgument, "task " + task.task_id + ": expected 8 frame images");
  std::lock_guard lock(mu_);
  const fs::path dir = task_dir(task.task_id);
  if (fs::exists(dir / "task.json"))
    throw Error(ErrorCode::kInvalidArgument, "task " + task.task_id + " already exists");
  fs::create_directories(dir);
  for (int i = 0; i < kFramesPerTask; ++i)
    io::write_file(root_ / "frames" / (frame_id(task.task_id, i) + ".png"), frame_pngs[i]);
  if (overlay_png) io::write_file(root_ / "frames" / (overlay_id(task.task_id) + ".png"), *overlay_png);
  const json j = {{"task_id", task.task_id},
                  {"frame_times", task.frame_times},
                  {"labelers", task.labelers},
                  {"overlay", overlay_png.has_value()}};
  io::write_file(dir / "task.json", j.dump(2));
}

std::vector<std::string> Store::task_ids() const {
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(root_ / "tasks")) {
    const fs::path p = e.path() / "task.json";
    if (!fs::exists(p)) continue;
    ids.push_back(json::parse(io::read_file(p)).at("task_id").get<std::string>());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::optional<LabelingTask> Store::task(const std::string& task_id) const {
  if (!valid_id(task_id)) return std::nullopt;
  const fs::path p = task_dir(task_id) / "task.json";
  if (!fs::exists(p)) return std::nullopt;
  const json j = json::parse(io::read_file(p));
  LabelingTask t;
  t.task_id = j.at("task_id").get<std::string>();
  t.frame_times = j.at("frame_times").get<std::vector<std::int64_t>>();
  t.labelers = j.at("labelers").get<std::vector<std::string>>();
  return t;
}

bool Store::has_overlay(const std::string& task_id) const {
  const fs::path p = task_dir(task_id) / "task.json";
  return fs::exists(p) && json::parse(io::read_file(p)).value("overlay", false);
}

std::optional<std::string> Store::frame_png(const std::string& id) const {
  if (!valid_id(id)) return std::nullopt;
  const fs::path p = root_ / "frames" / (id + ".png");
  if (!fs::exists(p)) return std::nullopt;
  return io::read_file(p);
}

PolygonAnnotation Store::submit(PolygonAnnotation a) {
  if (!task(a.task_id)) throw Error(ErrorCode::kNotFound, "unknown task " + a.task_id);
  std::lock_guard lock(mu_);
  const fs::path log = task_dir(a.task_id) / "annotations.jsonl";
  int prior = 0;
  if (std::ifstream in{log}) {
    std::string line;
    while (std::getline(in, line))
      if (!line.empty() && annotation_from_json(line).labeler_id == a.labeler_id) ++prior;
  }
  a.version = prior + 1;
  if (a.submitted_at.empty()) a.submitted_at = now_iso8601();
  std::ofstream out(log, std::ios::app | std::ios::binary);
  out << annotation_to_json(a) << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "cannot append to " + log.string());
  return a;
}

std::vector<PolygonAnnotation> Store::annotations(const std::string& task_id,
                                                  const std::optional<std::string>& labeler) const {
  if (!task(task_id)) throw Error(ErrorCode::kNotFound, "unknown task " + task_id);
  std::lock_guard lock(mu_);
  std::vector<PolygonAnnotation> out;
  std::ifstream in(task_dir(task_id) / "annotations.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto a = annotation_from_json(line);
    if (!labeler || a.labeler_id == *labeler) out.push_back(std::move(a));
  }
  return out;
}

std::vector<PolygonAnnotation> Store::latest(const std::string& task_id) const {
  std::map<std::string, PolygonAnnotation> by;
  for (auto& a : annotations(task_id)) by[a.labeler_id] = std::move(a);
  std::vector<PolygonAnnotation> out;
  for (auto& [_, a] : by) out.push_back(std::move(a));
  return out;
}

AggregateResult Store::aggregate(const std::string& task_id, int quorum) const {
  const auto subs = latest(task_id);
  if (subs.empty()) throw Error(ErrorCode::kUndefined, "task " + task_id + " has no annotations");
  const metrics::QuorumSpec spec{static_cast<int>(subs.size()), quorum};
  spec.validate();

  AggregateResult res;
  res.quorum = quorum;
  std::vector<BinaryMask> masks;
  for (const auto& a : subs) {
    res.labelers.push_back(a.labeler_id);
    masks.push_back(ingest::center_crop(rasterize(a.polygons, kFrameSide, kFrameSide)));
    for (std::size_t i = 0; i < a.polygons.size(); ++i) {
      const BinaryMask one = rasterize({a.polygons[i]}, kFrameSide, kFrameSide);
      const std::size_t total = count_positive(one);
      if (total > 0 && count_positive(ingest::center_crop(one)) == 0)
        res.margin_polygons.push_back({a.labeler_id, i});
    }
  }
  res.mask = metrics::aggregate_labels(masks, spec);
  return res;
}

}  // namespace ck::annotate
