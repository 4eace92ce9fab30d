#include "gazenet/preprocess/pupil.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gazenet/error.hpp"

namespace gazenet::preprocess {

std::vector<double> centered_moving_average(const std::vector<double>& x, std::size_t half) {
  const std::size_t n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t h = std::min({half, i, n - 1 - i});
    out[i] = (prefix[i + h + 1] - prefix[i - h]) / static_cast<double>(2 * h + 1);
  }
  return out;
}

CleanPupilTrace clean_pupil(const GazeTrace& gaze, const StimulusTiming& timing,
                            const PupilCleaningConfig& config) {
  struct Point {
    double t, v;
  };
  std::vector<Point> kept;
  kept.reserve(gaze.size());
  for (const auto& s : gaze) {
    if (s.valid && std::isfinite(s.pupil_mm) && std::isfinite(s.t) &&
        s.pupil_mm >= config.min_pupil_mm && s.pupil_mm <= config.max_pupil_mm) {
      kept.push_back({s.t, s.pupil_mm});
    }
  }
  const double fraction =
      gaze.empty() ? 0.0 : static_cast<double>(kept.size()) / static_cast<double>(gaze.size());
  if (fraction < config.min_valid_fraction) {
    std::ostringstream os;
    os << "pupil trace has valid fraction " << fraction << " < " << config.min_valid_fraction;
    throw QualityError(os.str(), fraction);
  }

  std::vector<double> sorted;
  sorted.reserve(kept.size());
  for (const auto& p : kept) sorted.push_back(p.v);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);

  const double rate = timing.gaze_hz;
  const std::size_t n = timing.nominal_samples();
  const double nominal_dt = 1.0 / rate;
  const double eps = 1e-9;

  CleanPupilTrace out;
  out.rate_hz = rate;
  std::vector<double> grid(n);
  out.interpolated_mask.assign(n, false);
  std::size_t j = 0;  // first kept sample with t >= grid time
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / rate;
    while (j < kept.size() && kept[j].t < t - eps) ++j;
    if (j < kept.size() && std::abs(kept[j].t - t) <= eps) {
      grid[k] = kept[j].v;
      continue;
    }
    const bool has_prev = j > 0;
    const bool has_next = j < kept.size();
    double value = median;
    bool bridged = false;
    if (has_prev && has_next) {
      const Point& a = kept[j - 1];
      const Point& b = kept[j];
      const double gap = b.t - a.t;
      if (gap <= config.max_interp_gap_s + eps) {
        value = a.v + (b.v - a.v) * (t - a.t) / gap;
        // A plain resampling step between neighbouring samples is not a repair.
        bridged = gap > 1.5 * nominal_dt;
      } else {
        bridged = true;
      }
    } else {
      // Before the first or after the last retained sample: hold the edge value
      // when it is close enough, otherwise fall back to the median.
      const Point& edge = has_prev ? kept[j - 1] : kept[j];
      if (std::abs(edge.t - t) <= config.max_interp_gap_s + eps) {
        value = edge.v;
        bridged = std::abs(edge.t - t) > 0.5 * nominal_dt;
      } else {
        bridged = true;
      }
    }
    grid[k] = value;
    out.interpolated_mask[k] = bridged;
  }

  const auto half = static_cast<std::size_t>(std::llround(config.smoothing_s * rate / 2.0));
  out.values = centered_moving_average(grid, half);

  const std::size_t baseline_n =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(config.baseline_s * rate)), 1, n);
  double baseline = 0;
  for (std::size_t k = 0; k < baseline_n; ++k) baseline += out.values[k];
  baseline /= static_cast<double>(baseline_n);
  out.baseline_mm = baseline;
  for (double& v : out.values) v -= baseline;
  return out;
}

}  // namespace gazenet::preprocess
