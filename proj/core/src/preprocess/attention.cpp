#include "gazenet/preprocess/attention.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "gazenet/error.hpp"
#include "gazenet/preprocess/imaging.hpp"

namespace gazenet::preprocess {
namespace {

// Columns of the downsampling operator: for each input pixel, which output
// cells it contributes to and with what weight.
struct Scatter {
  std::vector<std::vector<std::pair<std::size_t, double>>> by_input;
};

Scatter invert(const AreaWeights& aw, std::size_t in_len) {
  Scatter s;
  s.by_input.resize(in_len);
  for (std::size_t o = 0; o < aw.rows.size(); ++o) {
    const auto& row = aw.rows[o];
    for (std::size_t k = 0; k < row.w.size(); ++k) {
      if (row.w[k] > 0) s.by_input[row.first + k].push_back({o, row.w[k]});
    }
  }
  return s;
}

// Blurs a unit impulse at `center` along one axis and projects it onto the
// output cells.
void project_axis(long center, const std::vector<double>& kernel, long radius, long extent,
                  const Scatter& scatter, std::vector<double>& out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (long d = -radius; d <= radius; ++d) {
    const long p = center + d;
    if (p < 0 || p >= extent) continue;
    const double k = kernel[static_cast<std::size_t>(d + radius)];
    for (const auto& [o, w] : scatter.by_input[static_cast<std::size_t>(p)]) out[o] += k * w;
  }
}

}  // namespace

double sigma_pixels(const ScreenGeometry& g) {
  g.validate();
  const double aspect_angle = std::atan2(g.height_px, g.width_px);
  const double width_cm = g.diagonal_inches * 2.54 * std::cos(aspect_angle);
  const double pitch_cm = width_cm / g.width_px;
  const double one_degree = std::numbers::pi / 180.0;
  return 2.0 * g.viewing_distance_cm * std::tan(one_degree / 2.0) / pitch_cm;
}

AttentionMapSequence attention_maps(const GazeTrace& gaze, double sigma_px,
                                    const ScreenGeometry& geometry, const StimulusTiming& timing,
                                    const AttentionMapConfig& config) {
  if (!(sigma_px > 0)) throw ValidationError("attention_maps: sigma_px must be positive");
  const auto screen_w = static_cast<long>(std::llround(geometry.width_px));
  const auto screen_h = static_cast<long>(std::llround(geometry.height_px));
  const std::size_t out_h = config.map_height;
  const std::size_t out_w = config.map_width;
  const auto steps = static_cast<std::size_t>(std::llround(timing.duration_s / config.window_s));

  const long radius = static_cast<long>(std::ceil(config.kernel_radius_sigmas * sigma_px));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double ksum = 0;
  for (long d = -radius; d <= radius; ++d) {
    const double v = std::exp(-0.5 * static_cast<double>(d * d) / (sigma_px * sigma_px));
    kernel[static_cast<std::size_t>(d + radius)] = v;
    ksum += v;
  }
  for (double& v : kernel) v /= ksum;

  const Scatter sx = invert(area_weights(static_cast<std::size_t>(screen_w), out_w),
                            static_cast<std::size_t>(screen_w));
  const Scatter sy = invert(area_weights(static_cast<std::size_t>(screen_h), out_h),
                            static_cast<std::size_t>(screen_h));

  AttentionMapSequence seq;
  seq.sigma_px = sigma_px;
  seq.maps = FloatArray({steps, 1, out_h, out_w});
  std::vector<double> acc(out_h * out_w);
  std::vector<double> px(out_w), py(out_h);
  std::size_t cursor = 0;
  for (std::size_t w = 0; w < steps; ++w) {
    const double t0 = static_cast<double>(w) * config.window_s;
    const double t1 = t0 + config.window_s;
    std::fill(acc.begin(), acc.end(), 0.0);
    bool any = false;
    while (cursor < gaze.size() && gaze[cursor].t < t0) ++cursor;
    for (std::size_t i = cursor; i < gaze.size() && gaze[i].t < t1; ++i) {
      const auto& s = gaze[i];
      if (!s.valid || !std::isfinite(s.x) || !std::isfinite(s.y)) continue;
      const auto hx = static_cast<long>(std::floor(s.x));
      const auto hy = static_cast<long>(std::floor(s.y));
      if (hx < 0 || hx >= screen_w || hy < 0 || hy >= screen_h) continue;
      // The blur of a single histogram pixel is separable, so its downsampled
      // footprint is the outer product of two projected 1-D kernels.
      project_axis(hx, kernel, radius, screen_w, sx, px);
      project_axis(hy, kernel, radius, screen_h, sy, py);
      for (std::size_t r = 0; r < out_h; ++r) {
        if (py[r] == 0) continue;
        double* row = acc.data() + r * out_w;
        for (std::size_t c = 0; c < out_w; ++c) row[c] += py[r] * px[c];
      }
      any = true;
    }
    if (!any) continue;
    double total = 0;
    for (double v : acc) total += v;
    float* dst = seq.maps.data.data() + w * out_h * out_w;
    if (total > 0) {
      for (std::size_t k = 0; k < acc.size(); ++k) dst[k] = static_cast<float>(acc[k] / total);
    }
  }
  return seq;
}

}  // namespace gazenet::preprocess
