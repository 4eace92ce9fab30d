#include "gazenet/split.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "gazenet/error.hpp"

namespace gazenet {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split SplitAssignment::of(const std::string& participant_id) const {
  const auto it = participants.find(participant_id);
  if (it == participants.end()) {
    throw ValidationError("participant '" + participant_id + "' has no split assignment");
  }
  return it->second;
}

std::vector<std::string> SplitAssignment::members(Split split) const {
  std::vector<std::string> out;
  for (const auto& [id, s] : participants) {
    if (s == split) out.push_back(id);
  }
  return out;
}

std::array<std::size_t, 3> split_counts(std::size_t participants, const SplitRatios& r) {
  if (participants < 3) {
    throw ValidationError("need at least 3 participants to populate train/val/test, got " +
                          std::to_string(participants));
  }
  if (std::abs(r.train + r.val + r.test - 1.0) > 1e-9 || r.train < 0 || r.val < 0 || r.test < 0) {
    throw ValidationError("split ratios must be nonnegative and sum to 1");
  }
  const auto p = static_cast<double>(participants);
  const auto val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(r.val * p)));
  const auto test = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(r.test * p)));
  if (val + test >= participants) {
    // Only reachable with extreme ratios; keep one participant per split.
    return {participants - 2, 1, 1};
  }
  return {participants - val - test, val, test};
}

SplitAssignment split_participants(std::vector<std::string> ids, const SplitRatios& ratios,
                                   std::uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const auto counts = split_counts(ids.size(), ratios);

  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size() - 1; i > 0; --i) {
    const std::size_t j = rng() % (i + 1);
    std::swap(ids[i], ids[j]);
  }

  SplitAssignment out;
  out.ratios = ratios;
  out.seed = seed;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Split s = i < counts[0] ? Split::kTrain
                    : i < counts[0] + counts[1] ? Split::kVal
                                                : Split::kTest;
    out.participants[ids[i]] = s;
  }
  return out;
}

SplitAssignment split_by_participant(const DatasetManifest& manifest, const SplitRatios& ratios,
                                     std::uint64_t seed) {
  return split_participants(manifest.participants(), ratios, seed);
}

}  // namespace gazenet
