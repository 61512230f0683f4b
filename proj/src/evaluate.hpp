#pragma once

#include <filesystem>
#include <string>

#include "linearize.hpp"
#include "metrics.hpp"

namespace ck::evaluate {

// Directory-level reports. Predictions are the *.btg rasters in pred_dir;
// each pairs with the ground truth of the same stem in gt_dir (a raster for
// pixel and relaxed, a segment JSONL file for contrail). Reports are JSON
// with the pooled result, degenerate flags and a per-image breakdown.

std::string pixel_report(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                         int n_thresholds = 10000);

std::string contrail_report(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                            int n_thresholds, const metrics::MatchParams& match = {},
                            const linearize::LinearizeParams& lin = {});

/// Predictions are binarized at `threshold` first.
std::string relaxed_report(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                           double rho = 2.0, double threshold = 0.5);

}  // namespace ck::evaluate
