#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"
#include "geometry.hpp"
#include "metrics.hpp"

namespace ck::annotate {

inline constexpr int kFrameSide = 281;  // labelers see the uncropped region
inline constexpr int kFramesPerTask = 8;
inline constexpr int kTargetFrame = 5;

using Polygon = std::vector<Point>;  // closed implicitly, (row, col)

/// Pixel (r, c) is positive iff its centre (r, c) lies inside an odd number
/// of polygon boundaries of any polygon. Edges are half-open: a centre on
/// a top or left edge is inside, on a bottom or right edge outside.
/// Polygons with fewer than three distinct vertices are skipped and counted
/// in `skipped`.
BinaryMask rasterize(const std::vector<Polygon>& polygons, int width, int height, int* skipped = nullptr);

bool point_in_polygon(const Polygon& poly, Point p);

struct ComponentReport {
  std::size_t pixels = 0;
  double major_extent = 0.0;  // px along the principal axis, max - min + 1
  double minor_extent = 0.0;
  bool min_pixels_ok = false;
  bool aspect_ok = false;
};

inline constexpr std::size_t kMinContrailPixels = 10;
inline constexpr double kMinAspect = 3.0;

ComponentReport describe_pixels(const std::vector<Pixel>& px);

/// One report per 8-connected component, in raster order of first pixel.
std::vector<ComponentReport> guideline_check(const BinaryMask& mask);

struct LabelingTask {
  std::string task_id;
  std::vector<std::int64_t> frame_times;  // 8 epoch seconds, ascending
  std::vector<std::string> labelers;

  void validate() const;
};

struct PolygonAnnotation {
  std::string task_id;
  std::string labeler_id;
  std::vector<Polygon> polygons;
  std::string submitted_at;
  int version = 0;  // 1-based per (task, labeler)

  friend bool operator==(const PolygonAnnotation&, const PolygonAnnotation&) = default;
};

/// Raised for malformed submissions; `path` names the offending JSON field.
class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& msg)
      : Error(ErrorCode::kInvalidArgument, path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Parses and validates {labeler_id, polygons:[[[r,c],...],...]}.
PolygonAnnotation parse_submission(const std::string& task_id, const std::string& body, int frame_side = kFrameSide);

std::string annotation_to_json(const PolygonAnnotation& a);
PolygonAnnotation annotation_from_json(const std::string& line);

struct AggregateResult {
  BinaryMask mask;  // 256 x 256
  std::vector<std::string> labelers;
  int quorum = 0;
  struct MarginPolygon {
    std::string labeler_id;
    std::size_t index = 0;
  };
  std::vector<MarginPolygon> margin_polygons;  // positive pixels only outside the crop
};

/// On-disk store: <root>/frames/<frame id>.png and
/// <root>/tasks/<fnv1a64(task id) hex>/{task.json, annotations.jsonl}.
/// Annotation logs are append-only.
class Store {
 public:
  explicit Store(std::filesystem::path root);

  /// Registers a task with its eight frame PNGs and an optional density
  /// overlay PNG. Fails if the task already exists.
  void add_task(const LabelingTask& task, const std::vector<std::string>& frame_pngs,
                const std::optional<std::string>& overlay_png = std::nullopt);

  std::vector<std::string> task_ids() const;
  std::optional<LabelingTask> task(const std::string& task_id) const;
  bool has_overlay(const std::string& task_id) const;

  static std::string frame_id(const std::string& task_id, int index);
  static std::string overlay_id(const std::string& task_id);
  std::optional<std::string> frame_png(const std::string& frame_id) const;

  /// Appends a new version and returns it as stored.
  PolygonAnnotation submit(PolygonAnnotation a);

  /// Full history (all versions) in submission order, optionally filtered.
  std::vector<PolygonAnnotation> annotations(const std::string& task_id,
                                             const std::optional<std::string>& labeler = std::nullopt) const;

  /// Latest version per labeler, ordered by labeler id.
  std::vector<PolygonAnnotation> latest(const std::string& task_id) const;

  AggregateResult aggregate(const std::string& task_id, int quorum) const;

  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path task_dir(const std::string& task_id) const;

  std::filesystem::path root_;
  mutable std::mutex mu_;
};

bool valid_id(const std::string& id);

}  // namespace ck::annotate
