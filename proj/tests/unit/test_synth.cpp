#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "gazenet/error.hpp"
#include "gazenet/kv.hpp"
#include "gazenet/preprocess/labels.hpp"
#include "gazenet/synth.hpp"

namespace gazenet::synth {
namespace {

namespace fs = std::filesystem;

RenderOptions small_render(double duration = 4) {
  RenderOptions o;
  o.width = 48;
  o.height = 27;
  o.timing.duration_s = duration;
  return o;
}

TEST(Scene, EmptyBrightSceneIsUniform) {
  SceneParams p;
  p.brightness = 1;
  p.clutter_count = 0;
  const auto r = gen_scene(p, 1, small_render(1));
  ASSERT_EQ(r.frames.shape, (std::vector<std::size_t>{30, 27, 48, 3}));
  for (auto v : r.frames.data) ASSERT_EQ(v, r.frames.data[0]);
  EXPECT_EQ(r.frames.data[0], 255);
}

TEST(Scene, RenderIsDeterministic) {
  SceneParams p;
  p.clutter_count = 6;
  p.style_seed = 3;
  EXPECT_EQ(gen_scene(p, 9, small_render(1)).frames, gen_scene(p, 9, small_render(1)).frames);
}

TEST(Scene, MoreClutterMeansMoreEdges) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SceneParams few, many;
    few.clutter_count = 2;
    many.clutter_count = 12;
    few.style_seed = many.style_seed = seed;
    const double a = edge_density(gen_scene(few, seed, small_render(1)).frames);
    const double b = edge_density(gen_scene(many, seed, small_render(1)).frames);
    EXPECT_GT(b, a) << seed;
  }
}

TEST(Scene, ParamsOutOfRangeRejected) {
  SceneParams p;
  p.clutter_count = 13;
  EXPECT_THROW(p.validate(), ValidationError);
  p.clutter_count = 3;
  p.brightness = 1.5;
  EXPECT_THROW(p.validate(), ValidationError);
}

SimObserver quiet_observer() {
  SimObserver o;
  o.participant_id = "Q";
  o.gaze_noise_px = 0;
  o.pupil_noise_mm = 0;
  o.blink_rate_hz = 0;
  o.rating_noise = 0;
  return o;
}

TEST(Gaze, SingleCenteredObjectIsAFixedPoint) {
  Scene scene;
  scene.options = small_render(2);
  scene.world_width = static_cast<double>(scene.options.width);  // no pan
  SceneObject o;
  o.w = 8;
  o.h = 6;
  o.x = 24 - 4;
  o.y = 13.5 - 3;
  o.salience = 1;
  scene.objects.push_back(o);
  const auto frames = render(scene);
  const auto g = gen_gaze(scene, frames, quiet_observer(), {}, 5);
  ASSERT_EQ(g.gaze.size(), 120u);
  for (const auto& s : g.gaze) {
    ASSERT_TRUE(s.valid);
    EXPECT_DOUBLE_EQ(s.x, 960.0);
    EXPECT_DOUBLE_EQ(s.y, 540.0);
  }
}

TEST(Gaze, BrighterFramesConstrictThePupil) {
  Scene scene;
  scene.options = small_render(80);
  scene.world_width = static_cast<double>(scene.options.width);
  ByteArray frames({2400, 27, 48, 3});
  for (std::size_t f = 0; f < 2400; ++f) {
    const auto v = static_cast<std::uint8_t>(f < 1200 ? 51 : 204);
    std::fill_n(frames.data.begin() + static_cast<std::ptrdiff_t>(f * 27 * 48 * 3), 27 * 48 * 3, v);
  }
  const auto g = gen_gaze(scene, frames, quiet_observer(), {}, 1);
  double before = 0, after = 0;
  for (const auto& s : g.gaze) (s.t < 40 ? before : after) += s.pupil_mm;
  EXPECT_LT(after, before);
}

TEST(Gaze, FixedSeedGivesIdenticalTraces) {
  const auto r = gen_scene(random_scene_params(4), 4, small_render(3));
  const auto obs = make_observer("P", 8);
  const auto a = gen_gaze(r.scene, r.frames, obs, random_traits(2), 77);
  const auto b = gen_gaze(r.scene, r.frames, obs, random_traits(2), 77);
  ASSERT_EQ(a.gaze.size(), b.gaze.size());
  for (std::size_t i = 0; i < a.gaze.size(); ++i) {
    ASSERT_EQ(a.gaze[i].x, b.gaze[i].x);
    ASSERT_EQ(a.gaze[i].pupil_mm, b.gaze[i].pupil_mm);
    ASSERT_EQ(a.gaze[i].valid, b.gaze[i].valid);
  }
}

TEST(Labels, DarkSceneRatesMinimumLight) {
  SceneParams p;
  p.brightness = 0;
  EXPECT_EQ(gen_labels(p, quiet_observer(), {}, 1).at(0), 1);
  EXPECT_DOUBLE_EQ(objective_base(p, 0), 1.0);
}

TEST(Labels, AlignmentRaisesOrganization) {
  SceneParams lo, hi;
  lo.alignment = 0;
  hi.alignment = 1;
  const auto obs = make_observer("P", 3);
  EXPECT_GT(gen_labels(hi, obs, {}, 5).at(2), gen_labels(lo, obs, {}, 5).at(2));
}

TEST(Labels, ZeroNoiseObserverIsDeterministic) {
  const auto p = random_scene_params(2);
  EXPECT_EQ(gen_labels(p, quiet_observer(), {}, 1), gen_labels(p, quiet_observer(), {}, 99));
  const auto r = gen_labels(p, make_observer("A", 1), {}, 1);
  EXPECT_EQ(r.size(), kNumTasks);
  for (const auto& [id, v] : r) {
    EXPECT_GE(v, 1);
    EXPECT_LE(v, 7);
  }
}

DatasetOptions tiny_options() {
  DatasetOptions o;
  o.render.width = 16;
  o.render.height = 9;
  o.render.timing.duration_s = 1;
  return o;
}

TEST(Dataset, MinimumDatasetIsValid) {
  const auto dir = testing::temp_dir("synth_min");
  const auto m = gen_dataset(3, 2, 1, dir, tiny_options());
  EXPECT_EQ(m.records.size(), 6u);
  EXPECT_NO_THROW(load_manifest(dir / "manifest.txt"));
  for (const auto& r : m.records) {
    ASSERT_TRUE(r.ground_truth.has_value());
    const auto gt = read_ground_truth(m.resolve(*r.ground_truth));
    EXPECT_GT(gt.latents.gaze.valid_fraction, 0.5);
  }
  EXPECT_THROW(gen_dataset(2, 2, 1, dir / "x", tiny_options()), ValidationError);
}

TEST(Dataset, StudyScaleTrialCount) {
  const auto dir = testing::temp_dir("synth_scale");
  const auto m = gen_dataset(28, 16, 1, dir, tiny_options());
  EXPECT_EQ(m.records.size(), 224u);
  std::map<std::string, int> per;
  for (const auto& r : m.records) ++per[r.participant_id];
  for (const auto& [p, n] : per) EXPECT_EQ(n, 8);
}

TEST(Dataset, SameSeedIsByteIdentical) {
  const auto dir = testing::temp_dir("synth_det");
  gen_dataset(3, 3, 5, dir / "a", tiny_options());
  gen_dataset(3, 3, 5, dir / "b", tiny_options());
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir / "a");
    ASSERT_EQ(read_text_file(e.path()), read_text_file(dir / "b" / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 10u);
}

// ---------------------------------------------------------------- probes

// Plain logistic regression fitted by full-batch gradient descent on
// standardized features.
struct Probe {
  std::vector<double> w;
  std::vector<double> mean, scale;

  void fit(const std::vector<std::vector<double>>& x, const std::vector<int>& y) {
    const std::size_t d = x[0].size();
    mean.assign(d, 0);
    scale.assign(d, 0);
    for (const auto& r : x)
      for (std::size_t j = 0; j < d; ++j) mean[j] += r[j] / static_cast<double>(x.size());
    for (const auto& r : x)
      for (std::size_t j = 0; j < d; ++j) scale[j] += (r[j] - mean[j]) * (r[j] - mean[j]) / static_cast<double>(x.size());
    for (auto& s : scale) s = s > 0 ? std::sqrt(s) : 1;
    w.assign(d + 1, 0);
    for (int it = 0; it < 2000; ++it) {
      std::vector<double> g(d + 1, 0);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = prob(x[i]) - y[i];
        for (std::size_t j = 0; j < d; ++j) g[j] += e * (x[i][j] - mean[j]) / scale[j];
        g[d] += e;
      }
      for (std::size_t j = 0; j <= d; ++j) w[j] -= 0.5 * g[j] / static_cast<double>(x.size());
    }
  }
  double prob(const std::vector<double>& r) const {
    double z = w.back();
    for (std::size_t j = 0; j < r.size(); ++j) z += w[j] * (r[j] - mean[j]) / scale[j];
    return 1 / (1 + std::exp(-z));
  }
  double accuracy(const std::vector<std::vector<double>>& x, const std::vector<int>& y) const {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < x.size(); ++i) ok += (prob(x[i]) > 0.5) == (y[i] == 1) ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(x.size());
  }
};

struct ProbeTrial {
  std::string participant;
  std::vector<double> scene, gaze;
  preprocess::Labels labels{};
};

// 1000 trials: 125 observers x 8 of 40 stimuli, generated in memory.
std::vector<ProbeTrial> probe_trials() {
  constexpr std::size_t kParticipants = 125, kVideos = 40, kPer = 8;
  const std::uint64_t seed = 2024;
  RenderOptions render;
  render.width = 64;
  render.height = 36;
  std::vector<RenderedScene> scenes;
  for (std::size_t v = 0; v < kVideos; ++v) {
    scenes.push_back(gen_scene(random_scene_params(derive_seed(seed, 3, v)), derive_seed(seed, 4, v), render));
  }
  std::vector<ProbeTrial> trials;
  std::vector<preprocess::TrialRatings> ratings;
  for (std::size_t p = 0; p < kParticipants; ++p) {
    const std::string pid = "P" + std::to_string(p);
    const auto obs = make_observer(pid, derive_seed(seed, 1, p));
    std::mt19937_64 rng(derive_seed(seed, 2, p));
    std::vector<std::size_t> order(kVideos);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < kPer; ++i) {
      const auto v = order[i];
      const auto& sc = scenes[v];
      TrialLatents lat;
      lat.traits = random_traits(derive_seed(seed, 5, p * 100003 + v));
      lat.gaze = gen_gaze(sc.scene, sc.frames, obs, lat.traits, derive_seed(seed, 6, p * 100003 + v)).summary;
      const auto& sp = sc.scene.params;
      ProbeTrial t;
      t.participant = pid;
      t.scene = {sp.brightness, static_cast<double>(sp.clutter_count), sp.alignment, sp.natural_fraction};
      t.gaze = {lat.gaze.dwell_natural, std::log(lat.gaze.evoked_amplitude + 1e-9), lat.gaze.mean_interest};
      trials.push_back(t);
      ratings.push_back({pid, "V" + std::to_string(v),
                         gen_labels(sp, obs, lat, derive_seed(seed, 7, p * 100003 + v))});
    }
  }
  const auto table = preprocess::normalize_and_binarize(ratings);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    trials[i].labels = table.at(ratings[i].participant_id, ratings[i].video_id).labels;
  }
  // Labels are relative to each observer's own mean, so features are too.
  for (std::size_t p = 0; p < kParticipants; ++p) {
    for (auto member : {&ProbeTrial::scene, &ProbeTrial::gaze}) {
      const std::size_t d = (trials[p * kPer].*member).size();
      for (std::size_t j = 0; j < d; ++j) {
        double m = 0;
        for (std::size_t i = 0; i < kPer; ++i) m += (trials[p * kPer + i].*member)[j] / kPer;
        for (std::size_t i = 0; i < kPer; ++i) (trials[p * kPer + i].*member)[j] -= m;
      }
    }
  }
  return trials;
}

const std::vector<ProbeTrial>& cached_trials() {
  static const auto trials = probe_trials();
  return trials;
}

// Held-out accuracy (second half of the observers) for one dimension.
double probe_accuracy(int dim, bool with_gaze) {
  const auto& trials = cached_trials();
  std::vector<std::vector<double>> xtr, xte;
  std::vector<int> ytr, yte;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    auto x = trials[i].scene;
    if (with_gaze) x.insert(x.end(), trials[i].gaze.begin(), trials[i].gaze.end());
    (i < trials.size() / 2 ? xtr : xte).push_back(x);
    (i < trials.size() / 2 ? ytr : yte).push_back(trials[i].labels[static_cast<std::size_t>(dim)]);
  }
  Probe probe;
  probe.fit(xtr, ytr);
  return probe.accuracy(xte, yte);
}

TEST(Probe, SceneParamsRecoverObjectiveLabels) {
  double total = 0;
  for (int d : dimensions_in(Category::kObjective)) {
    const double acc = probe_accuracy(d, false);
    RecordProperty(std::string(dimension(d).name), std::to_string(acc));
    total += acc;
  }
  EXPECT_GE(total / kNumObjective, 0.95);
}

TEST(Probe, GazeFeaturesAddSubjectiveSignal) {
  double scene = 0, both = 0;
  for (int d : dimensions_in(Category::kSubjective)) {
    scene += probe_accuracy(d, false);
    both += probe_accuracy(d, true);
  }
  scene /= kNumSubjective;
  both /= kNumSubjective;
  RecordProperty("scene_only", std::to_string(scene));
  RecordProperty("scene_and_gaze", std::to_string(both));
  EXPECT_GE(both - scene, 0.05) << "scene-only " << scene << " with gaze " << both;
}

}  // namespace
}  // namespace gazenet::synth
