#pragma once

#include <filesystem>

#include "gazenet/types.hpp"

namespace gazenet {

// CSV with header `t,x,y,pupil_mm,valid`; valid is 0/1.
GazeTrace read_gaze_csv(const std::filesystem::path& path);
void write_gaze_csv(const std::filesystem::path& path, const GazeTrace& gaze);

}  // namespace gazenet
