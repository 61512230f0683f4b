#include "server.hpp"

#include "httplib.h"
#include "json.hpp"

namespace ck::annotate {
namespace {
using nlohmann::json;

const char* const kGuidelines[] = {
    "Only mark a contrail if it covers at least 10 pixels.",
    "A contrail must be at least three times as long as it is wide.",
    "A contrail should appear suddenly or enter from the edge of the image.",
    "A contrail should be visible in at least two frames of the sequence.",
};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& msg, const std::string& field = {}) {
  json j = {{"error", msg}};
  if (!field.empty()) j["field"] = field;
  send_json(res, status, j);
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kShapeMismatch: return 400;
    case ErrorCode::kUndefined: return 409;
    default: return 500;
  }
}

json annotation_json(const PolygonAnnotation& a) { return json::parse(annotation_to_json(a)); }

json polygon_reports(const PolygonAnnotation& a) {
  json out = json::array();
  for (const auto& poly : a.polygons) {
    const BinaryMask m = rasterize({poly}, kFrameSide, kFrameSide);
    std::vector<Pixel> px;
    for (int r = 0; r < m.height(); ++r)
      for (int c = 0; c < m.width(); ++c)
        if (m.at(r, c)) px.push_back({r, c});
    const ComponentReport rep = describe_pixels(px);
    out.push_back({{"pixels", rep.pixels},
                   {"min_pixels_ok", rep.min_pixels_ok},
                   {"aspect_ok", rep.aspect_ok}});
  }
  return out;
}

template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    send_error(res, 400, e.what(), e.path());
  } catch (const Error& e) {
    send_error(res, status_for(e.code()), e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

json task_json(const Store& store, const LabelingTask& t) {
  json frames = json::array();
  for (int i = 0; i < kFramesPerTask; ++i)
    frames.push_back({{"index", i},
                      {"time", t.frame_times[i]},
                      {"url", "/frames/" + Store::frame_id(t.task_id, i) + ".png"}});
  json j = {{"task_id", t.task_id},
            {"frames", frames},
            {"target_index", kTargetFrame},
            {"frame_size", kFrameSide},
            {"labelers", t.labelers},
            {"guidelines", kGuidelines},
            {"overlay_url", nullptr}};
  if (store.has_overlay(t.task_id)) j["overlay_url"] = "/frames/" + Store::overlay_id(t.task_id) + ".png";
  return j;
}

}  // namespace

std::unique_ptr<httplib::Server> make_server(Store& store) {
  auto srv = std::make_unique<httplib::Server>();

  srv->Get("/tasks", [&store](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, {{"tasks", store.task_ids()}}); });
  });

  srv->Get(R"(/tasks/([^/]+))", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto t = store.task(req.matches[1]);
      if (!t) return send_error(res, 404, "unknown task");
      send_json(res, 200, task_json(store, *t));
    });
  });

  srv->Get(R"(/frames/([^/]+)\.png)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto png = store.frame_png(req.matches[1]);
      if (!png) return send_error(res, 404, "unknown frame");
      res.set_content(*png, "image/png");
    });
  });

  srv->Post(R"(/tasks/([^/]+)/annotations)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      if (!store.task(id)) return send_error(res, 404, "unknown task");
      const PolygonAnnotation stored = store.submit(parse_submission(id, req.body));
      json j = annotation_json(stored);
      j["guidelines"] = polygon_reports(stored);
      send_json(res, 201, j);
    });
  });

  srv->Get(R"(/tasks/([^/]+)/annotations)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      if (!store.task(id)) return send_error(res, 404, "unknown task");
      std::optional<std::string> labeler;
      if (req.has_param("labeler")) labeler = req.get_param_value("labeler");
      json list = json::array();
      for (const auto& a : store.annotations(id, labeler)) list.push_back(annotation_json(a));
      json latest = json::object();
      for (const auto& a : store.latest(id))
        if (!labeler || a.labeler_id == *labeler) latest[a.labeler_id] = a.version;
      send_json(res, 200, {{"task_id", id}, {"annotations", list}, {"latest_versions", latest}});
    });
  });

  srv->Post(R"(/tasks/([^/]+)/aggregate)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      if (!store.task(id)) return send_error(res, 404, "unknown task");
      json body;
      try {
        body = req.body.empty() ? json::object() : json::parse(req.body);
      } catch (const json::parse_error& e) {
        throw ValidationError("$", std::string("invalid JSON: ") + e.what());
      }
      if (!body.is_object()) throw ValidationError("$", "expected an object");
      if (!body.contains("quorum") || !body["quorum"].is_number_integer())
        throw ValidationError("quorum", "expected an integer");
      const AggregateResult agg = store.aggregate(id, body["quorum"].get<int>());
      json pos = json::array();
      for (int r = 0; r < agg.mask.height(); ++r)
        for (int c = 0; c < agg.mask.width(); ++c)
          if (agg.mask.at(r, c)) pos.push_back({r, c});
      json margin = json::array();
      for (const auto& m : agg.margin_polygons) margin.push_back({{"labeler_id", m.labeler_id}, {"polygon", m.index}});
      send_json(res, 200,
                {{"task_id", id},
                 {"quorum", agg.quorum},
                 {"labelers", agg.labelers},
                 {"width", agg.mask.width()},
                 {"height", agg.mask.height()},
                 {"positive_count", pos.size()},
                 {"positive_pixels", pos},
                 {"margin_polygons", margin}});
    });
  });

  return srv;
}

void serve(Store& store, const std::string& host, int port) {
  auto srv = make_server(store);
  if (!srv->listen(host, port))
    throw Error(ErrorCode::kIo, "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace ck::annotate
