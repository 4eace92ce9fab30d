#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gazenet/dimensions.hpp"
#include "gazenet/manifest.hpp"
#include "gazenet/types.hpp"

// Procedural stand-in for the walkthrough study: rendered rooms, simulated
// viewers (gaze, pupil) and their ratings, with known generating factors.
namespace gazenet::synth {

struct SceneParams {
  double brightness = 0.5;        // background luminance, 0..1
  int clutter_count = 4;          // furniture rectangles, 0..12
  double alignment = 0.5;         // grid-snap strength, 0..1
  double natural_fraction = 0.5;  // share of wood/green rectangles, 0..1
  std::uint64_t style_seed = 0;

  void validate() const;
};

struct RenderOptions {
  std::size_t width = 160;
  std::size_t height = 90;
  StimulusTiming timing;
  double pan_fraction = 0.6;  // extra world width traversed by the camera pan
};

struct SceneObject {
  double x = 0, y = 0, w = 0, h = 0;  // world coordinates (pixels at render scale)
  std::array<std::uint8_t, 3> rgb{};
  bool natural = false;
  double salience = 0;
};

struct Scene {
  SceneParams params;
  RenderOptions options;
  double world_width = 0;
  std::vector<SceneObject> objects;

  // Horizontal camera offset (world pixels) at time t.
  double pan_offset(double t) const;
  // On-screen centroid (render pixels) of object i at time t.
  std::array<double, 2> centroid(std::size_t i, double t) const;
  bool visible(std::size_t i, double t) const;
};

Scene layout_scene(const SceneParams& params, const RenderOptions& options = {});
ByteArray render(const Scene& scene);

struct RenderedScene {
  Scene scene;
  ByteArray frames;  // T_raw x H x W x 3
};

RenderedScene gen_scene(const SceneParams& params, std::uint64_t seed,
                        const RenderOptions& options = {});

// Mean fraction of horizontally adjacent pixel pairs whose luminance differs
// by more than `threshold` (0..1 scale), over all frames.
double edge_density(const ByteArray& frames, double threshold = 0.05);

struct SimObserver {
  std::string participant_id;
  std::array<double, kNumTasks> rating_bias{};
  double gaze_noise_px = 25;
  double pupil_gain = 1.0;
  double pupil_noise_mm = 0.04;
  double blink_rate_hz = 0.25;
  double rating_noise = 0.5;
};

// Per-trial hidden state of the viewer. `engagement` scales the pupil's
// evoked responses and `nature_affinity` biases dwell towards natural objects;
// both feed the subjective ratings and are otherwise invisible in the video.
struct TrialTraits {
  double engagement = 0;
  double nature_affinity = 0;
};

struct GazeSummary {
  double dwell_natural = 0;     // share of valid samples on natural objects
  double mean_interest = 0;     // mean of the interest latent
  double evoked_amplitude = 0;  // mean per-onset response amplitude
  double valid_fraction = 0;
};

struct GeneratedGaze {
  GazeTrace gaze;
  std::vector<double> interest;  // latent interest per sample
  GazeSummary summary;
};

// Noisy pursuit of object centroids with salience-weighted dwell, blinks, and
// pupil_mm = 4 + gain * (0.8 * (1 - local luminance) + 0.4 * interest) + AR(1).
GeneratedGaze gen_gaze(const Scene& scene, const ByteArray& frames, const SimObserver& observer,
                       const TrialTraits& traits, std::uint64_t seed,
                       const ScreenGeometry& screen = {});

struct TrialLatents {
  TrialTraits traits;
  GazeSummary gaze;
};

// Ratings 1..7 for the 15 active dimensions.
std::map<int, int> gen_labels(const SceneParams& params, const SimObserver& observer,
                              const TrialLatents& latents, std::uint64_t seed);

// Objective rating before observer bias and clamping; exposed for probes.
double objective_base(const SceneParams& params, int dimension_id);

struct DatasetOptions {
  std::size_t videos_per_participant = 8;
  RenderOptions render;
  ScreenGeometry screen;
};

SimObserver make_observer(const std::string& participant_id, std::uint64_t seed);
SceneParams random_scene_params(std::uint64_t seed);
TrialTraits random_traits(std::uint64_t seed);

// Writes manifest.txt, videos/*.arr, gaze/*.csv and truth/*.txt under `out_dir`
// and returns the loaded manifest.
DatasetManifest gen_dataset(std::size_t n_participants, std::size_t n_videos, std::uint64_t seed,
                            const std::filesystem::path& out_dir,
                            const DatasetOptions& options = {});

// Ground-truth sidecar written per trial (never consumed by the model path).
struct GroundTruth {
  SceneParams scene;
  TrialLatents latents;
};
GroundTruth read_ground_truth(const std::filesystem::path& path);

// Deterministic stream derivation for independent per-trial generators.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace gazenet::synth
