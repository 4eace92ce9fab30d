#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gazenet/dimensions.hpp"
#include "gazenet/types.hpp"

namespace gazenet::preprocess {

using Labels = std::array<std::uint8_t, kNumTasks>;

struct TrialRatings {
  std::string participant_id;
  std::string video_id;
  std::map<int, int> ratings;  // active dimension id -> 1..7
};

struct NormalizedTrial {
  std::array<double, kNumTasks> z{};
  Labels labels{};
};

struct SubjectStats {
  std::array<double, kNumTasks> mean{};
  std::array<double, kNumTasks> stddev{};  // population
};

struct NormalizedLabelTable {
  std::map<std::pair<std::string, std::string>, NormalizedTrial> trials;
  std::map<std::string, SubjectStats> subjects;

  const NormalizedTrial& at(const std::string& participant, const std::string& video) const;
};

// Per-subject z-scores; label = z > 0, and z == 0 (including zero-variance
// subjects) falls back to raw rating > 4. Throws ValidationError when a
// participant has fewer than two trials.
NormalizedLabelTable normalize_and_binarize(const std::vector<TrialRatings>& trials);

}  // namespace gazenet::preprocess
