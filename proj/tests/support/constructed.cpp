#include "constructed.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "gazenet/preprocess/align.hpp"
#include "gazenet/synth.hpp"

namespace gazenet::testing {
namespace {

using Rng = std::mt19937_64;
using preprocess::AlignedSample;

constexpr std::array<std::array<int, 3>, 2> kNatural{{{115, 78, 42}, {52, 125, 55}}};

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

// Artificial colors span every hue outside the wood/plant range, so only the
// natural class forms a compact color cluster.
std::array<std::uint8_t, 3> artificial_color(Rng& rng) {
  double hue = uniform(rng, 150.0, 380.0);  // degrees, wraps past red into orange
  if (hue >= 360) hue -= 360;
  const double sat = uniform(rng, 0.5, 1.0), val = uniform(rng, 0.5, 1.0);
  const double c = val * sat, hp = hue / 60.0, x = c * (1 - std::abs(std::fmod(hp, 2.0) - 1));
  std::array<double, 3> rgb{};
  if (hp < 1) rgb = {c, x, 0};
  else if (hp < 2) rgb = {x, c, 0};
  else if (hp < 3) rgb = {0, c, x};
  else if (hp < 4) rgb = {0, x, c};
  else if (hp < 5) rgb = {x, 0, c};
  else rgb = {c, 0, x};
  std::array<std::uint8_t, 3> out{};
  for (int k = 0; k < 3; ++k) out[k] = static_cast<std::uint8_t>(std::lround(255 * (rgb[k] + val - c)));
  return out;
}

synth::SceneObject object(Rng& rng, double x, double y, double w, double h, bool natural) {
  synth::SceneObject o;
  o.x = x;
  o.y = y;
  o.w = w;
  o.h = h;
  o.natural = natural;
  if (natural) {
    const auto& base = kNatural[rng() % kNatural.size()];
    std::normal_distribution<double> jitter(0.0, 10.0);
    for (int c = 0; c < 3; ++c) o.rgb[c] = static_cast<std::uint8_t>(std::clamp(base[c] + jitter(rng), 0.0, 255.0));
  } else {
    o.rgb = artificial_color(rng);
  }
  return o;
}

// A camera that does not move, one rendered frame per step.
synth::Scene static_scene(const ModelConfig& c, double brightness) {
  synth::Scene s;
  s.params.brightness = brightness;
  s.options.width = c.frame_width;
  s.options.height = c.frame_height;
  s.options.pan_fraction = 0;
  s.options.timing.duration_s = static_cast<double>(c.steps);
  s.options.timing.video_fps = 1;
  s.world_width = static_cast<double>(c.frame_width);
  return s;
}

// Random rectangles inside [x_lo, x_hi) with a given natural share.
void clutter(synth::Scene& s, Rng& rng, std::size_t n, double x_lo, double x_hi, double p_natural) {
  const double W = static_cast<double>(s.options.width), H = static_cast<double>(s.options.height);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = uniform(rng, 0.08, 0.18) * W;
    const double h = uniform(rng, 0.2, 0.45) * H;
    const double x = uniform(rng, x_lo, std::max(x_lo, x_hi - w));
    const double y = uniform(rng, 0.05 * H, 0.95 * H - h);
    s.objects.push_back(object(rng, x, y, w, h, uniform(rng, 0, 1) < p_natural));
  }
}

void copy_frames(const ByteArray& rendered, std::size_t first, std::size_t count, FloatArray& dst,
                 std::size_t at) {
  const std::size_t H = rendered.shape[1], W = rendered.shape[2];
  for (std::size_t k = 0; k < count; ++k) {
    preprocess::resize_frame(rendered.data.data() + (first + k) * H * W * 3, H, W,
                             dst.data.data() + (at + k) * 3 * H * W, H, W);
  }
}

AlignedSample blank_sample(const ModelConfig& c, Rng& rng, std::size_t index) {
  AlignedSample s;
  s.participant_id = "P" + std::to_string(index % 8);
  s.video_id = "V" + std::to_string(index);
  const std::size_t T = c.steps;
  s.frames.shape = {T, 3, c.frame_height, c.frame_width};
  s.frames.data.assign(T * 3 * c.frame_height * c.frame_width, 0.0f);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  s.pupil_images.shape = {T, 2, c.pupil_size, c.pupil_size};
  s.pupil_images.data.resize(T * 2 * c.pupil_size * c.pupil_size);
  for (auto& v : s.pupil_images.data) v = u(rng);
  s.attention_maps.shape = {T, 1, c.frame_height, c.frame_width};
  s.attention_maps.data.resize(T * c.frame_height * c.frame_width);
  for (auto& v : s.attention_maps.data) v = u(rng) / static_cast<float>(c.frame_height * c.frame_width);
  return s;
}

void set_labels(AlignedSample& s, bool positive) {
  s.labels.fill(static_cast<std::uint8_t>(positive ? 1 : 0));
}

}  // namespace

ModelConfig compact_config(std::size_t steps, std::size_t height, std::size_t width) {
  ModelConfig c;
  c.steps = steps;
  c.frame_height = height;
  c.frame_width = width;
  c.video_channels = {8, 16, 32};
  c.attention_channels = {8, 16, 32};
  c.pupil_channels = {8, 16};
  c.video_task_channels = 16;
  c.pupil_task_channels = 8;
  c.lstm_hidden = 32;
  c.head_hidden = 32;
  return c;
}

LocalizationSet localization_set(const ModelConfig& c, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  const double W = static_cast<double>(c.frame_width), H = static_cast<double>(c.frame_height);
  LocalizationSet out;
  for (std::size_t i = 0; i < count; ++i) {
    const bool positive = i % 2 == 0;
    const bool left = rng() % 2 == 0;
    auto scene = static_scene(c, uniform(rng, 0.3, 0.7));
    const double x0 = uniform(rng, 0.05, 0.15) * W + (left ? 0.0 : 0.5 * W);
    const double y0 = uniform(rng, 0.1, 0.3) * H;
    const Box b{y0, x0, y0 + 0.6 * H, x0 + 0.3 * W};
    scene.objects.push_back(object(rng, b.x0, b.y0, b.x1 - b.x0, b.y1 - b.y0, positive));
    // Positive rooms get an artificial twin of the target in the other half,
    // so total artificial area has the same distribution in both classes.
    const double other = left ? 0.5 * W : 0.0;
    if (positive) {
      const double tx = other + uniform(rng, 0.05, 0.15) * W;
      scene.objects.push_back(object(rng, tx, uniform(rng, 0.1, 0.3) * H, b.x1 - b.x0, b.y1 - b.y0, false));
    }
    clutter(scene, rng, rng() % 4, other, other + 0.5 * W, 0.0);
    out.targets.push_back(b);
    auto s = blank_sample(c, rng, i);
    copy_frames(synth::render(scene), 0, c.steps, s.frames, 0);
    set_labels(s, positive);
    out.samples.push_back(std::move(s));
  }
  return out;
}

std::vector<AlignedSample> first_impression_set(const ModelConfig& c, std::size_t count, std::size_t cue_steps,
                                                std::uint64_t seed) {
  Rng rng(seed);
  const double W = static_cast<double>(c.frame_width);
  std::vector<AlignedSample> out;
  for (std::size_t i = 0; i < count; ++i) {
    const bool positive = i % 2 == 0;
    auto s = blank_sample(c, rng, i);
    auto cue = static_scene(c, uniform(rng, 0.3, 0.7));
    clutter(cue, rng, 4 + rng() % 3, 0, W, positive ? 1.0 : 0.0);
    copy_frames(synth::render(cue), 0, cue_steps, s.frames, 0);
    for (std::size_t t = cue_steps; t < c.steps; ++t) {
      auto later = static_scene(c, uniform(rng, 0.3, 0.7));
      clutter(later, rng, 4 + rng() % 3, 0, W, uniform(rng, 0, 1));
      copy_frames(synth::render(later), t, 1, s.frames, t);
    }
    set_labels(s, positive);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<const AlignedSample*> pointers(const std::vector<AlignedSample>& samples, std::size_t begin,
                                           std::size_t end) {
  std::vector<const AlignedSample*> out;
  for (std::size_t i = begin; i < std::min(end, samples.size()); ++i) out.push_back(&samples[i]);
  return out;
}

}  // namespace gazenet::testing
