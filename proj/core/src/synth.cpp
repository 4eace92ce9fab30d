#include "gazenet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>

#include "gazenet/error.hpp"
#include "gazenet/gaze_io.hpp"
#include "gazenet/kv.hpp"

namespace gazenet::synth {
namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
double normal(Rng& rng, double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(rng); }

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

double luminance(const std::uint8_t* px) {
  return (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) / 255.0;
}

constexpr std::array<std::array<double, 3>, 6> kArtificialPalette{{
    {200, 40, 40}, {40, 70, 190}, {235, 235, 235}, {130, 50, 150}, {60, 60, 60}, {230, 180, 30},
}};
constexpr std::array<std::array<double, 3>, 2> kNaturalPalette{{
    {115, 78, 42},   // wood
    {52, 125, 55},   // plants
}};

// Subjective rating model: weights on the four centred scene factors
// (brightness, clutter, alignment, natural share), then engagement and
// nature affinity.
struct SubjectiveWeights {
  std::array<double, 4> scene;
  double engagement;
  double affinity;
};
constexpr std::array<SubjectiveWeights, kNumSubjective> kSubjective{{
    {{0.4, -0.3, 0.2, 0.5}, 0.4, 0.6},   // color comfort
    {{0.1, 0.6, -0.2, 0.2}, 0.9, 0.3},   // interest
    {{0.5, -0.2, 0.3, 0.3}, 0.6, 0.5},   // valence
    {{0.3, 0.7, -0.3, -0.2}, 0.8, 0.1},  // stimulation
    {{0.5, 0.3, 0.0, 0.4}, 0.7, 0.4},    // vitality
    {{0.3, -0.5, 0.4, 0.4}, 0.4, 0.7},   // comfort
    {{-0.1, -0.6, 0.4, 0.5}, 0.3, 0.8},  // relaxation
    {{0.2, -0.2, 0.2, 0.6}, 0.4, 0.9},   // hominess
    {{0.6, 0.1, 0.1, 0.3}, 0.7, 0.5},    // uplift
    {{0.4, -0.3, 0.3, 0.3}, 0.8, 0.5},   // approachability
    {{0.2, 0.6, -0.1, 0.2}, 0.9, 0.4},   // explorability
}};

// Pupil dilation impulse response, peaking `kPeak` seconds after onset.
constexpr double kPeak = 0.6;
double evoked_kernel(double tau) {
  if (tau < 0 || tau > 5 * kPeak) return 0.0;
  return (tau / kPeak) * std::exp(1.0 - tau / kPeak);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  // splitmix64 over the combined words
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

void SceneParams::validate() const {
  auto unit = [](double v) { return v >= 0 && v <= 1; };
  if (!unit(brightness) || !unit(alignment) || !unit(natural_fraction) || clutter_count < 0 ||
      clutter_count > 12) {
    throw ValidationError("scene parameters out of range");
  }
}

double Scene::pan_offset(double t) const {
  const double travel = world_width - static_cast<double>(options.width);
  return travel * 0.5 * (1.0 - std::cos(std::numbers::pi * t / options.timing.duration_s));
}

std::array<double, 2> Scene::centroid(std::size_t i, double t) const {
  const auto& o = objects[i];
  return {o.x + o.w / 2 - pan_offset(t), o.y + o.h / 2};
}

bool Scene::visible(std::size_t i, double t) const {
  const double cx = centroid(i, t)[0];
  return cx >= 0 && cx < static_cast<double>(options.width);
}

Scene layout_scene(const SceneParams& params, const RenderOptions& options) {
  params.validate();
  Scene scene;
  scene.params = params;
  scene.options = options;
  const double W = static_cast<double>(options.width);
  const double H = static_cast<double>(options.height);
  scene.world_width = W * (1.0 + options.pan_fraction);
  Rng rng(derive_seed(params.style_seed, 0x5CE4E));

  const int n = params.clutter_count;
  const int natural = static_cast<int>(std::lround(params.natural_fraction * n));
  const double cell = W / 6.0;
  const double a = params.alignment;
  const double bg = 255.0 * params.brightness;
  for (int i = 0; i < n; ++i) {
    SceneObject o;
    const double w = uniform(rng, 0.08, 0.22) * W;
    const double h = uniform(rng, 0.20, 0.45) * H;
    const double x = uniform(rng, 0.0, scene.world_width - w);
    const double y = uniform(rng, 0.08 * H, 0.92 * H - h);
    const double w_snap = std::max(cell / 2, std::round(w / (cell / 2)) * (cell / 2));
    const double h_snap = std::round(h / (0.1 * H)) * (0.1 * H);
    const double x_snap = std::clamp(std::round(x / cell) * cell, 0.0, scene.world_width - w_snap);
    const double y_snap = 0.88 * H - h_snap;  // standing on a common floor line
    o.w = (1 - a) * w + a * w_snap;
    o.h = (1 - a) * h + a * h_snap;
    o.x = (1 - a) * x + a * x_snap;
    o.y = (1 - a) * y + a * y_snap;
    o.natural = i < natural;
    const auto& base = o.natural ? kNaturalPalette[rng() % kNaturalPalette.size()]
                                 : kArtificialPalette[rng() % kArtificialPalette.size()];
    for (int c = 0; c < 3; ++c) o.rgb[c] = to_byte(base[c] + normal(rng, 10.0));
    const double lum = (0.299 * o.rgb[0] + 0.587 * o.rgb[1] + 0.114 * o.rgb[2]);
    const double contrast = std::abs(lum - bg) / 255.0;
    o.salience = (o.w * o.h) / (W * H) * (0.5 + contrast);
    scene.objects.push_back(o);
  }
  return scene;
}

ByteArray render(const Scene& scene) {
  const auto& opt = scene.options;
  const std::size_t frames = opt.timing.nominal_frames();
  const std::size_t H = opt.height, W = opt.width;
  ByteArray out({frames, H, W, 3});
  const std::uint8_t bg = to_byte(255.0 * scene.params.brightness);
  std::fill(out.data.begin(), out.data.end(), bg);
  for (std::size_t f = 0; f < frames; ++f) {
    const double t = static_cast<double>(f) / opt.timing.video_fps;
    const double offset = scene.pan_offset(t);
    std::uint8_t* frame = out.data.data() + f * H * W * 3;
    for (const auto& o : scene.objects) {
      const long x0 = std::max(0L, std::lround(o.x - offset));
      const long x1 = std::min(static_cast<long>(W), std::lround(o.x + o.w - offset));
      const long y0 = std::max(0L, std::lround(o.y));
      const long y1 = std::min(static_cast<long>(H), std::lround(o.y + o.h));
      for (long y = y0; y < y1; ++y) {
        for (long x = x0; x < x1; ++x) {
          std::uint8_t* px = frame + (static_cast<std::size_t>(y) * W + static_cast<std::size_t>(x)) * 3;
          px[0] = o.rgb[0];
          px[1] = o.rgb[1];
          px[2] = o.rgb[2];
        }
      }
    }
  }
  return out;
}

RenderedScene gen_scene(const SceneParams& params, std::uint64_t seed, const RenderOptions& options) {
  SceneParams p = params;
  p.style_seed = derive_seed(params.style_seed, seed);
  RenderedScene rs;
  rs.scene = layout_scene(p, options);
  rs.frames = render(rs.scene);
  return rs;
}

double edge_density(const ByteArray& frames, double threshold) {
  const std::size_t T = frames.shape.at(0), H = frames.shape.at(1), W = frames.shape.at(2);
  std::size_t edges = 0;
  for (std::size_t f = 0; f < T; ++f) {
    const std::uint8_t* frame = frames.data.data() + f * H * W * 3;
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t x = 0; x + 1 < W; ++x) {
        const std::uint8_t* a = frame + (y * W + x) * 3;
        if (std::abs(luminance(a) - luminance(a + 3)) > threshold) ++edges;
      }
    }
  }
  return static_cast<double>(edges) / static_cast<double>(T * H * (W - 1));
}

GeneratedGaze gen_gaze(const Scene& scene, const ByteArray& frames, const SimObserver& observer,
                       const TrialTraits& traits, std::uint64_t seed, const ScreenGeometry& screen) {
  if (frames.rank() != 4 || frames.shape[3] != 3 || frames.shape[0] == 0) {
    throw ShapeError("gen_gaze: frames must be T x H x W x 3");
  }
  Rng rng(seed);
  const auto& timing = scene.options.timing;
  const std::size_t n = timing.nominal_samples();
  const std::size_t T = frames.shape[0], H = frames.shape[1], W = frames.shape[2];
  const double sx = screen.width_px / static_cast<double>(W);
  const double sy = screen.height_px / static_cast<double>(H);
  const double dt = 1.0 / timing.gaze_hz;

  GeneratedGaze out;
  out.gaze.resize(n);
  out.interest.assign(n, 0.0);

  // Pass 1: fixation targets and blink mask.
  std::vector<int> target(n, -1);
  std::vector<std::array<double, 2>> free_point(n);
  std::vector<double> onsets, amplitudes;
  std::size_t k = 0;
  while (k < n) {
    const double t = static_cast<double>(k) * dt;
    std::vector<double> weights;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
      if (!scene.visible(i, t)) continue;
      const auto& o = scene.objects[i];
      candidates.push_back(i);
      weights.push_back(o.salience * std::exp(0.9 * traits.nature_affinity * (o.natural ? 1 : 0)));
    }
    const double duration = 0.25 + std::exponential_distribution<double>(1.0 / 0.35)(rng);
    int chosen = -1;
    std::array<double, 2> point{static_cast<double>(W) / 2, static_cast<double>(H) / 2};
    if (!candidates.empty()) {
      std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
      chosen = static_cast<int>(candidates[pick(rng)]);
      const auto& o = scene.objects[static_cast<std::size_t>(chosen)];
      const double amp = 0.6 * std::exp(0.7 * traits.engagement) * (o.natural ? 1.2 : 1.0);
      onsets.push_back(t);
      amplitudes.push_back(amp);
    } else if (observer.gaze_noise_px > 0) {
      point[0] += normal(rng, 0.15 * static_cast<double>(W));
      point[1] += normal(rng, 0.15 * static_cast<double>(H));
    }
    const auto end = std::min(n, k + std::max<std::size_t>(1, static_cast<std::size_t>(duration / dt)));
    for (; k < end; ++k) {
      const double tk = static_cast<double>(k) * dt;
      if (chosen >= 0 && !scene.visible(static_cast<std::size_t>(chosen), tk)) break;
      target[k] = chosen;
      free_point[k] = point;
    }
  }

  std::vector<bool> blink(n, false);
  if (observer.blink_rate_hz > 0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (uniform(rng, 0, 1) < observer.blink_rate_hz * dt) {
        const auto len = static_cast<std::size_t>(uniform(rng, 0.08, 0.2) / dt);
        for (std::size_t j = i; j < std::min(n, i + len); ++j) blink[j] = true;
        i += len;
      }
    }
  }

  for (std::size_t i = 0; i < onsets.size(); ++i) {
    const auto first = static_cast<std::size_t>(onsets[i] / dt);
    const auto last = std::min(n, first + static_cast<std::size_t>(5 * kPeak / dt) + 1);
    for (std::size_t j = first; j < last; ++j) {
      out.interest[j] += amplitudes[i] * evoked_kernel(static_cast<double>(j) * dt - onsets[i]);
    }
  }

  // Pass 2: positions and pupil.
  double ar = 0;
  std::size_t valid = 0, on_natural = 0;
  double interest_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    std::array<double, 2> p = target[i] >= 0 ? scene.centroid(static_cast<std::size_t>(target[i]), t)
                                             : free_point[i];
    const double noise = observer.gaze_noise_px;
    double gx = p[0] * sx + (noise > 0 ? normal(rng, noise) : 0.0);
    double gy = p[1] * sy + (noise > 0 ? normal(rng, noise) : 0.0);
    gx = std::clamp(gx, 0.0, std::nextafter(screen.width_px, 0.0));
    gy = std::clamp(gy, 0.0, std::nextafter(screen.height_px, 0.0));

    const std::size_t f = std::min(T - 1, static_cast<std::size_t>(t * timing.video_fps));
    const long cx = std::clamp(static_cast<long>(gx / sx), 0L, static_cast<long>(W) - 1);
    const long cy = std::clamp(static_cast<long>(gy / sy), 0L, static_cast<long>(H) - 1);
    double lum = 0;
    int count = 0;
    for (long y = std::max(0L, cy - 4); y <= std::min(static_cast<long>(H) - 1, cy + 4); ++y) {
      for (long x = std::max(0L, cx - 4); x <= std::min(static_cast<long>(W) - 1, cx + 4); ++x) {
        lum += luminance(frames.data.data() +
                         ((f * H + static_cast<std::size_t>(y)) * W + static_cast<std::size_t>(x)) * 3);
        ++count;
      }
    }
    lum /= count;
    ar = 0.9 * ar + (observer.pupil_noise_mm > 0 ? normal(rng, observer.pupil_noise_mm) : 0.0);
    const double pupil =
        4.0 + observer.pupil_gain * (0.8 * (1.0 - lum) + 0.4 * out.interest[i]) + ar;

    GazeSample& s = out.gaze[i];
    s.t = t;
    s.valid = !blink[i];
    if (s.valid) {
      s.x = gx;
      s.y = gy;
      s.pupil_mm = pupil;
      ++valid;
      if (target[i] >= 0 && scene.objects[static_cast<std::size_t>(target[i])].natural) ++on_natural;
    }
    interest_sum += out.interest[i];
  }
  out.summary.valid_fraction = static_cast<double>(valid) / static_cast<double>(n);
  out.summary.dwell_natural = valid ? static_cast<double>(on_natural) / static_cast<double>(valid) : 0;
  out.summary.mean_interest = interest_sum / static_cast<double>(n);
  double amp_sum = 0;
  for (double a : amplitudes) amp_sum += a;
  out.summary.evoked_amplitude = amplitudes.empty() ? 0 : amp_sum / static_cast<double>(amplitudes.size());
  return out;
}

double objective_base(const SceneParams& p, int dimension_id) {
  switch (dimension_id) {
    case 0: return 1.0 + 6.0 * p.brightness;
    case 1: return 1.0 + 6.0 * static_cast<double>(p.clutter_count) / 12.0;
    case 2: return 1.0 + 6.0 * p.alignment;
    case 3: return 1.0 + 6.0 * p.natural_fraction;
    default: throw ValidationError("objective_base: not an objective dimension");
  }
}

std::map<int, int> gen_labels(const SceneParams& p, const SimObserver& observer,
                              const TrialLatents& latents, std::uint64_t seed) {
  Rng rng(seed);
  std::map<int, int> ratings;
  auto clamp7 = [](double v) { return static_cast<int>(std::clamp(std::lround(v), 1L, 7L)); };
  for (int d = 0; d < static_cast<int>(kNumObjective); ++d) {
    ratings[d] = clamp7(objective_base(p, d) + observer.rating_bias[static_cast<std::size_t>(d)]);
  }
  const std::array<double, 4> f{(p.brightness - 0.5) * 2, (p.clutter_count / 12.0 - 0.5) * 2,
                                (p.alignment - 0.5) * 2, (p.natural_fraction - 0.5) * 2};
  for (std::size_t s = 0; s < kNumSubjective; ++s) {
    const auto& w = kSubjective[s];
    double score = w.engagement * latents.traits.engagement + w.affinity * latents.traits.nature_affinity;
    for (std::size_t j = 0; j < 4; ++j) score += w.scene[j] * f[j];
    if (observer.rating_noise > 0) score += normal(rng, observer.rating_noise);
    const int id = static_cast<int>(kNumObjective + s);
    ratings[id] = clamp7(4.0 + 1.3 * score + observer.rating_bias[static_cast<std::size_t>(id)]);
  }
  return ratings;
}

SimObserver make_observer(const std::string& participant_id, std::uint64_t seed) {
  Rng rng(seed);
  SimObserver o;
  o.participant_id = participant_id;
  for (std::size_t d = 0; d < kNumTasks; ++d) {
    o.rating_bias[d] = d < kNumObjective ? static_cast<double>(static_cast<int>(rng() % 3) - 1)
                                         : normal(rng, 0.5);
  }
  o.gaze_noise_px = uniform(rng, 15, 35);
  o.pupil_gain = uniform(rng, 0.7, 1.3);
  o.pupil_noise_mm = uniform(rng, 0.03, 0.05);
  o.blink_rate_hz = uniform(rng, 0.15, 0.35);
  o.rating_noise = 0.5;
  return o;
}

SceneParams random_scene_params(std::uint64_t seed) {
  Rng rng(seed);
  auto level = [&rng] { return static_cast<double>(rng() % 7) / 6.0; };
  SceneParams p;
  p.brightness = level();
  p.clutter_count = static_cast<int>(rng() % 7) * 2;
  p.alignment = level();
  p.natural_fraction = level();
  p.style_seed = rng();
  return p;
}

TrialTraits random_traits(std::uint64_t seed) {
  Rng rng(seed);
  TrialTraits t;
  t.engagement = normal(rng);
  t.nature_affinity = normal(rng);
  return t;
}

namespace {

void write_ground_truth(const std::filesystem::path& path, const SceneParams& p,
                        const TrialLatents& l) {
  KeyValueDocument doc;
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  doc.globals["scene.brightness"] = num(p.brightness);
  doc.globals["scene.clutter_count"] = std::to_string(p.clutter_count);
  doc.globals["scene.alignment"] = num(p.alignment);
  doc.globals["scene.natural_fraction"] = num(p.natural_fraction);
  doc.globals["scene.style_seed"] = std::to_string(p.style_seed);
  doc.globals["latent.engagement"] = num(l.traits.engagement);
  doc.globals["latent.nature_affinity"] = num(l.traits.nature_affinity);
  doc.globals["gaze.dwell_natural"] = num(l.gaze.dwell_natural);
  doc.globals["gaze.mean_interest"] = num(l.gaze.mean_interest);
  doc.globals["gaze.evoked_amplitude"] = num(l.gaze.evoked_amplitude);
  doc.globals["gaze.valid_fraction"] = num(l.gaze.valid_fraction);
  write_text_file(path, doc.serialize());
}

}  // namespace

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  const auto doc = KeyValueDocument::load(path);
  const auto& g = doc.globals;
  GroundTruth gt;
  gt.scene.brightness = require_double(g, "scene.brightness");
  gt.scene.clutter_count = static_cast<int>(require_int(g, "scene.clutter_count"));
  gt.scene.alignment = require_double(g, "scene.alignment");
  gt.scene.natural_fraction = require_double(g, "scene.natural_fraction");
  gt.scene.style_seed = std::stoull(require_string(g, "scene.style_seed"));
  gt.latents.traits.engagement = require_double(g, "latent.engagement");
  gt.latents.traits.nature_affinity = require_double(g, "latent.nature_affinity");
  gt.latents.gaze.dwell_natural = require_double(g, "gaze.dwell_natural");
  gt.latents.gaze.mean_interest = require_double(g, "gaze.mean_interest");
  gt.latents.gaze.evoked_amplitude = require_double(g, "gaze.evoked_amplitude");
  gt.latents.gaze.valid_fraction = require_double(g, "gaze.valid_fraction");
  return gt;
}

DatasetManifest gen_dataset(std::size_t n_participants, std::size_t n_videos, std::uint64_t seed,
                            const std::filesystem::path& out_dir, const DatasetOptions& options) {
  if (n_participants < 3) throw ValidationError("gen_dataset: need at least 3 participants");
  if (n_videos < 2) throw ValidationError("gen_dataset: need at least 2 videos per participant");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "videos");
  fs::create_directories(out_dir / "gaze");
  fs::create_directories(out_dir / "truth");

  char buf[64];
  auto pid = [&buf](std::size_t p) {
    std::snprintf(buf, sizeof buf, "P%03zu", p);
    return std::string(buf);
  };
  auto vid = [&buf](std::size_t v) {
    std::snprintf(buf, sizeof buf, "V%03zu", v);
    return std::string(buf);
  };

  const std::size_t per = std::min(options.videos_per_participant, n_videos);
  std::vector<std::set<std::size_t>> viewed(n_participants);
  std::vector<SimObserver> observers;
  for (std::size_t p = 0; p < n_participants; ++p) {
    observers.push_back(make_observer(pid(p), derive_seed(seed, 1, p)));
    std::vector<std::size_t> order(n_videos);
    for (std::size_t v = 0; v < n_videos; ++v) order[v] = v;
    Rng rng(derive_seed(seed, 2, p));
    for (std::size_t i = n_videos - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
    viewed[p].insert(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(per));
  }

  DatasetManifest manifest;
  manifest.geometry = options.screen;
  manifest.timing = options.render.timing;
  manifest.root = out_dir;
  std::map<std::pair<std::size_t, std::size_t>, RecordRef> refs;
  for (std::size_t v = 0; v < n_videos; ++v) {
    const SceneParams params = random_scene_params(derive_seed(seed, 3, v));
    const auto rendered = gen_scene(params, derive_seed(seed, 4, v), options.render);
    const fs::path frames_rel = fs::path("videos") / (vid(v) + ".arr");
    write_array(out_dir / frames_rel, rendered.frames);
    for (std::size_t p = 0; p < n_participants; ++p) {
      if (!viewed[p].count(v)) continue;
      const std::string name = pid(p) + "_" + vid(v);
      TrialLatents latents;
      latents.traits = random_traits(derive_seed(seed, 5, p * 100003 + v));
      const auto gaze = gen_gaze(rendered.scene, rendered.frames, observers[p], latents.traits,
                                 derive_seed(seed, 6, p * 100003 + v), options.screen);
      latents.gaze = gaze.summary;
      RecordRef ref;
      ref.participant_id = pid(p);
      ref.video_id = vid(v);
      ref.frames = frames_rel;
      ref.gaze = fs::path("gaze") / (name + ".csv");
      ref.ground_truth = fs::path("truth") / (name + ".txt");
      ref.ratings = gen_labels(rendered.scene.params, observers[p], latents,
                               derive_seed(seed, 7, p * 100003 + v));
      write_gaze_csv(out_dir / ref.gaze, gaze.gaze);
      write_ground_truth(out_dir / *ref.ground_truth, rendered.scene.params, latents);
      refs[{p, v}] = std::move(ref);
    }
  }
  for (auto& [key, ref] : refs) manifest.records.push_back(std::move(ref));
  save_manifest(out_dir / "manifest.txt", manifest);
  return load_manifest(out_dir / "manifest.txt");
}

}  // namespace gazenet::synth
