#pragma once

#include <vector>

#include "common.hpp"
#include "geometry.hpp"

namespace ck::detector {

struct MannsteinParams {
  int n_orientations = 16;
  int kernel_len = 19;
  int kernel_width = 1;
  double btd_threshold = 0.5;       // K, on the background-subtracted BTD
  double response_threshold = 0.2;  // K, oriented-line anisotropy
  int min_component_px = 10;
  int background_window = 11;       // odd side of the median window

  void validate() const;
};

/// bt11 - bt12; missing propagates.
BTGrid btd(const BTGrid& bt11, const BTGrid& bt12);

/// One oriented line kernel: pixel offsets (row, col) with uniform weight.
struct LineKernel {
  double angle_deg = 0.0;
  std::vector<Pixel> offsets;
};

/// Kernel bank over [0, 180). Orientations k and k + n/2 are exact 90 degree
/// rotations of each other when n is even.
std::vector<LineKernel> make_kernel_bank(const MannsteinParams& p);

/// Field minus its local median (missing pixels excluded from the window).
Grid<float> subtract_median_background(const Grid<float>& field, int window);

struct ScreenResult {
  BinaryMask mask;
  bool passed = false;
  Grid<float> response;  // max-minus-mean oriented response, K
};

/// High-recall linear contrail screen: median background removal, oriented
/// line filtering, thresholding and small-component removal.
ScreenResult mannstein_screen(const BTGrid& btd_grid, const MannsteinParams& params = {});

}  // namespace ck::detector
