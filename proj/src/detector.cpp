#include "detector.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ck::detector {

void MannsteinParams::validate() const {
  if (n_orientations < 4) throw Error(ErrorCode::kInvalidArgument, "n_orientations must be >= 4");
  if (kernel_width < 1 || kernel_len <= kernel_width)
    throw Error(ErrorCode::kInvalidArgument, "kernel_len must exceed kernel_width >= 1");
  if (min_component_px < 1) throw Error(ErrorCode::kInvalidArgument, "min_component_px must be >= 1");
  if (background_window < 1 || background_window % 2 == 0)
    throw Error(ErrorCode::kInvalidArgument, "background_window must be odd and positive");
}

BTGrid btd(const BTGrid& bt11, const BTGrid& bt12) {
  require_same_shape(bt11, bt12, "btd");
  BTGrid out{Grid<float>(bt11.width(), bt11.height()), 0, bt11.geo};
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    if (bt11.grid.missing(i) || bt12.grid.missing(i)) {
      out.grid.set_missing(i);
      continue;
    }
    out.grid[i] = bt11.grid[i] - bt12.grid[i];
  }
  return out;
}

std::vector<LineKernel> make_kernel_bank(const MannsteinParams& p) {
  p.validate();
  const int n = p.n_orientations;
  std::vector<LineKernel> bank(n);
  const bool quarter = n % 2 == 0;
  const int base = quarter ? n / 2 : n;
  for (int k = 0; k < base; ++k) {
    const double theta = k * 180.0 / n;
    const double rad = theta * std::numbers::pi / 180.0;
    const Point dir{-std::sin(rad), std::cos(rad)};
    const Point nrm{std::cos(rad), std::sin(rad)};
    auto& offs = bank[k].offsets;
    for (int i = 0; i < p.kernel_len; ++i) {
      const double t = i - 0.5 * (p.kernel_len - 1);
      for (int j = 0; j < p.kernel_width; ++j) {
        const double s = j - 0.5 * (p.kernel_width - 1);
        const Pixel px{static_cast<int>(std::round(t * dir.r + s * nrm.r)),
                       static_cast<int>(std::round(t * dir.c + s * nrm.c))};
        if (std::find(offs.begin(), offs.end(), px) == offs.end()) offs.push_back(px);
      }
    }
    bank[k].angle_deg = theta;
  }
  if (quarter) {
    for (int k = base; k < n; ++k) {
      bank[k].angle_deg = k * 180.0 / n;
      for (const auto& o : bank[k - base].offsets) bank[k].offsets.push_back({-o.c, o.r});
    }
  }
  return bank;
}

Grid<float> subtract_median_background(const Grid<float>& field, int window) {
  Grid<float> out(field.width(), field.height());
  const int h = window / 2;
  std::vector<float> buf;
  buf.reserve(static_cast<std::size_t>(window) * window);
  for (int r = 0; r < field.height(); ++r) {
    for (int c = 0; c < field.width(); ++c) {
      if (field.missing(r, c)) {
        out.set_missing(r, c);
        continue;
      }
      buf.clear();
      for (int rr = std::max(0, r - h); rr <= std::min(field.height() - 1, r + h); ++rr)
        for (int cc = std::max(0, c - h); cc <= std::min(field.width() - 1, c + h); ++cc)
          if (!field.missing(rr, cc)) buf.push_back(field.at(rr, cc));
      // Lower median for even counts keeps the result a sample value.
      const auto mid = buf.begin() + (buf.size() - 1) / 2;
      std::nth_element(buf.begin(), mid, buf.end());
      out.at(r, c) = field.at(r, c) - *mid;
    }
  }
  return out;
}

ScreenResult mannstein_screen(const BTGrid& btd_grid, const MannsteinParams& params) {
  params.validate();
  const Grid<float>& field = btd_grid.grid;
  if (field.width() < params.kernel_len || field.height() < params.kernel_len)
    throw Error(ErrorCode::kInvalidArgument, "mannstein_screen: grid smaller than the line kernel");

  const auto bank = make_kernel_bank(params);
  const Grid<float> hp = subtract_median_background(field, params.background_window);

  ScreenResult res;
  res.response = Grid<float>(field.width(), field.height());
  BinaryMask raw(field.width(), field.height());
  std::vector<double> per_angle(bank.size());
  for (int r = 0; r < field.height(); ++r) {
    for (int c = 0; c < field.width(); ++c) {
      if (hp.missing(r, c)) {
        res.response.set_missing(r, c);
        continue;
      }
      double best = -std::numeric_limits<double>::infinity(), sum = 0.0;
      for (std::size_t k = 0; k < bank.size(); ++k) {
        double acc = 0.0;
        int cnt = 0;
        for (const auto& o : bank[k].offsets) {
          const int rr = r + o.r, cc = c + o.c;
          if (hp.contains(rr, cc) && !hp.missing(rr, cc)) {
            acc += hp.at(rr, cc);
            ++cnt;
          }
        }
        per_angle[k] = cnt ? acc / cnt : 0.0;
        best = std::max(best, per_angle[k]);
        sum += per_angle[k];
      }
      // An isotropic structure responds equally at every angle; only the
      // excess of the best orientation over the mean counts as linear.
      const double response = best - sum / static_cast<double>(bank.size());
      res.response.at(r, c) = static_cast<float>(response);
      if (response >= params.response_threshold && hp.at(r, c) >= params.btd_threshold)
        raw.at(r, c) = 1;
    }
  }
  res.mask = remove_small_components(raw, static_cast<std::size_t>(params.min_component_px));
  res.passed = count_positive(res.mask) > 0;
  return res;
}

}  // namespace ck::detector
