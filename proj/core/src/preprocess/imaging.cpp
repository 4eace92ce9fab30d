#include "gazenet/preprocess/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gazenet/error.hpp"

namespace gazenet::preprocess {
namespace {

void require_finite(std::span<const double> window, const char* what) {
  for (double x : window) {
    if (!std::isfinite(x)) throw ValidationError(std::string(what) + ": non-finite input");
  }
}

}  // namespace

AreaWeights area_weights(std::size_t in_len, std::size_t out_len) {
  if (in_len == 0 || out_len == 0) throw ShapeError("area_weights: empty extent");
  AreaWeights aw;
  aw.rows.resize(out_len);
  const double scale = static_cast<double>(in_len) / static_cast<double>(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double lo = static_cast<double>(i) * scale;
    const double hi = static_cast<double>(i + 1) * scale;
    auto first = static_cast<std::size_t>(std::floor(lo));
    auto last = std::min(in_len - 1, static_cast<std::size_t>(std::ceil(hi)) - 1);
    auto& row = aw.rows[i];
    row.first = first;
    for (std::size_t k = first; k <= last; ++k) {
      const double overlap =
          std::min(hi, static_cast<double>(k + 1)) - std::max(lo, static_cast<double>(k));
      row.w.push_back(std::max(0.0, overlap) / scale);
    }
  }
  return aw;
}

std::vector<double> paa(std::span<const double> series, std::size_t segments) {
  const auto aw = area_weights(series.size(), segments);
  std::vector<double> out(segments, 0.0);
  for (std::size_t i = 0; i < segments; ++i) {
    const auto& row = aw.rows[i];
    for (std::size_t k = 0; k < row.w.size(); ++k) out[i] += row.w[k] * series[row.first + k];
  }
  return out;
}

std::vector<double> rescale_symmetric(std::span<const double> series) {
  std::vector<double> out(series.size(), 0.0);
  if (series.empty()) return out;
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  const double range = *hi - *lo;
  if (!(range > 0)) return out;
  for (std::size_t i = 0; i < series.size(); ++i) {
    out[i] = std::clamp(((series[i] - *hi) + (series[i] - *lo)) / range, -1.0, 1.0);
  }
  return out;
}

SquareMatrix gaf(std::span<const double> window) {
  require_finite(window, "gaf");
  const auto x = rescale_symmetric(window);
  const std::size_t n = x.size();
  std::vector<double> phi(n);
  for (std::size_t i = 0; i < n; ++i) phi[i] = std::acos(x[i]);
  SquareMatrix g(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = std::cos(phi[i] + phi[j]);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

std::vector<std::size_t> quantile_bins(std::span<const double> window, std::size_t bins) {
  require_finite(window, "mtf");
  if (bins < 2) throw ValidationError("mtf: need at least 2 bins");
  std::vector<double> sorted(window.begin(), window.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  // Linear-interpolated quantiles at q = k / bins, k = 1 .. bins - 1.
  std::vector<double> edges(bins - 1);
  for (std::size_t k = 1; k < bins; ++k) {
    const double pos = static_cast<double>(k) / static_cast<double>(bins) * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, n - 1);
    edges[k - 1] = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  }
  std::vector<std::size_t> out(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) {
    // Number of edges strictly below the value.
    out[i] = static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), window[i]) -
                                      edges.begin());
  }
  return out;
}

SquareMatrix transition_matrix(std::span<const std::size_t> bins, std::size_t num_bins) {
  SquareMatrix w(num_bins);
  for (std::size_t i = 0; i + 1 < bins.size(); ++i) w(bins[i], bins[i + 1]) += 1.0;
  for (std::size_t r = 0; r < num_bins; ++r) {
    double total = 0;
    for (std::size_t c = 0; c < num_bins; ++c) total += w(r, c);
    for (std::size_t c = 0; c < num_bins; ++c) {
      w(r, c) = total > 0 ? w(r, c) / total : 1.0 / static_cast<double>(num_bins);
    }
  }
  return w;
}

SquareMatrix mtf_from_bins(std::span<const std::size_t> bins, std::size_t num_bins) {
  for (auto b : bins) {
    if (b >= num_bins) throw ValidationError("mtf: bin index out of range");
  }
  const auto w = transition_matrix(bins, num_bins);
  SquareMatrix m(bins.size());
  for (std::size_t i = 0; i < bins.size(); ++i) {
    for (std::size_t j = 0; j < bins.size(); ++j) m(i, j) = w(bins[i], bins[j]);
  }
  return m;
}

SquareMatrix mtf(std::span<const double> window, std::size_t num_bins) {
  if (window.size() < 2) throw ValidationError("mtf: window needs at least 2 samples");
  const auto bins = quantile_bins(window, num_bins);
  return mtf_from_bins(bins, num_bins);
}

PupilImageSequence pupil_image_sequence(const CleanPupilTrace& trace,
                                        const PupilImagingConfig& config) {
  const auto per_window = static_cast<std::size_t>(std::llround(config.window_s * trace.rate_hz));
  if (per_window == 0 || trace.values.size() % per_window != 0) {
    throw ShapeError("pupil trace length " + std::to_string(trace.values.size()) +
                     " is not a whole number of windows");
  }
  const std::size_t steps = trace.values.size() / per_window;
  const std::size_t s = config.image_size;
  PupilImageSequence seq;
  seq.window_seconds = config.window_s;
  seq.images = FloatArray({steps, 2, s, s});
  for (std::size_t t = 0; t < steps; ++t) {
    const std::span<const double> window(trace.values.data() + t * per_window, per_window);
    const auto reduced = paa(window, s);
    const auto g = gaf(reduced);
    const auto m = mtf(reduced, config.mtf_bins);
    float* dst = seq.images.data.data() + t * 2 * s * s;
    for (std::size_t k = 0; k < s * s; ++k) {
      dst[k] = static_cast<float>(g.v[k]);
      dst[s * s + k] = static_cast<float>(m.v[k]);
    }
  }
  return seq;
}

}  // namespace gazenet::preprocess
