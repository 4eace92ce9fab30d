#pragma once

#include <vector>

#include "gazenet/types.hpp"

namespace gazenet::preprocess {

struct PupilCleaningConfig {
  double min_valid_fraction = 0.5;
  double min_pupil_mm = 1.5;
  double max_pupil_mm = 9.0;
  double max_interp_gap_s = 0.075;  // blink-scale gaps are bridged linearly
  double smoothing_s = 0.100;
  double baseline_s = 0.500;
};

struct CleanPupilTrace {
  std::vector<double> values;            // baseline-corrected mm on a uniform grid
  std::vector<bool> interpolated_mask;   // grid points not backed by a retained sample
  double baseline_mm = 0;
  double rate_hz = 60;
};

// Uniform resampling onto k / rate_hz, k = 0 .. duration*rate - 1. Gaps up to
// `max_interp_gap_s` between retained samples are interpolated linearly;
// longer gaps are filled with the median of the retained samples. Then a
// centered moving average and baseline subtraction.
// Throws QualityError when fewer than `min_valid_fraction` samples survive.
CleanPupilTrace clean_pupil(const GazeTrace& gaze, const StimulusTiming& timing = {},
                            const PupilCleaningConfig& config = {});

// Centered moving average with half-width `half`; the window shrinks
// symmetrically near the ends so linear trends are preserved exactly.
std::vector<double> centered_moving_average(const std::vector<double>& x, std::size_t half);

}  // namespace gazenet::preprocess
