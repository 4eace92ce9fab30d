#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gazenet/array_io.hpp"

namespace gazenet {

struct ScreenGeometry {
  double width_px = 1920;
  double height_px = 1080;
  double diagonal_inches = 27;
  double viewing_distance_cm = 65;

  void validate() const;
};

// Timing of the walkthrough stimuli and the eye tracker.
struct StimulusTiming {
  double duration_s = 80;
  double video_fps = 30;
  double gaze_hz = 60;

  std::size_t nominal_frames() const;   // 2400
  std::size_t nominal_samples() const;  // 4800
  std::size_t windows() const;          // one per second: 80
  void validate() const;
};

struct GazeSample {
  double t = 0;  // seconds since stimulus onset
  double x = 0;  // screen pixels, origin top-left
  double y = 0;
  double pupil_mm = 0;
  bool valid = false;
};

using GazeTrace = std::vector<GazeSample>;

// One participant x video trial with its raw streams loaded.
struct SequenceRecord {
  std::string participant_id;
  std::string video_id;
  ByteArray frames;  // T_raw x H x W x 3
  GazeTrace gaze;
  std::map<int, int> ratings;  // dimension id -> 1..7
};

}  // namespace gazenet
