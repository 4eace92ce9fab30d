#pragma once

#include <cstddef>

#include "gazenet/array_io.hpp"
#include "gazenet/types.hpp"

namespace gazenet::preprocess {

// Pixels subtended by one degree of visual angle at the screen centre.
double sigma_pixels(const ScreenGeometry& geometry);

struct AttentionMapConfig {
  std::size_t map_height = 90;
  std::size_t map_width = 160;
  double window_s = 1.0;
  double kernel_radius_sigmas = 3.0;
};

// T x 1 x H' x W'; each nonempty window is a probability map.
struct AttentionMapSequence {
  FloatArray maps;
  double sigma_px = 0;
};

// Per window: histogram of valid on-screen gaze points at screen resolution,
// truncated Gaussian blur (kernel renormalized over its support, zero outside
// the screen), area downsampling, then normalization to unit mass. Windows
// without valid samples stay zero.
AttentionMapSequence attention_maps(const GazeTrace& gaze, double sigma_px,
                                    const ScreenGeometry& geometry = {},
                                    const StimulusTiming& timing = {},
                                    const AttentionMapConfig& config = {});

}  // namespace gazenet::preprocess
