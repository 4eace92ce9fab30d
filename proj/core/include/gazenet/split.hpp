#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gazenet/manifest.hpp"

namespace gazenet {

enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Split split);

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

struct SplitAssignment {
  std::map<std::string, Split> participants;
  SplitRatios ratios;
  std::uint64_t seed = 0;

  Split of(const std::string& participant_id) const;
  std::vector<std::string> members(Split split) const;
};

// Per-split participant counts: val and test get round(ratio * P) (at least
// one each), train receives the remainder.
std::array<std::size_t, 3> split_counts(std::size_t participants, const SplitRatios& ratios);

SplitAssignment split_participants(std::vector<std::string> participant_ids,
                                   const SplitRatios& ratios, std::uint64_t seed);

SplitAssignment split_by_participant(const DatasetManifest& manifest, const SplitRatios& ratios,
                                     std::uint64_t seed);

}  // namespace gazenet
