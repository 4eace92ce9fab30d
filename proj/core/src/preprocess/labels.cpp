#include "gazenet/preprocess/labels.hpp"

#include <cmath>

#include "gazenet/error.hpp"

namespace gazenet::preprocess {

const NormalizedTrial& NormalizedLabelTable::at(const std::string& participant,
                                                const std::string& video) const {
  const auto it = trials.find({participant, video});
  if (it == trials.end()) {
    throw ValidationError("no normalized labels for (" + participant + ", " + video + ")");
  }
  return it->second;
}

NormalizedLabelTable normalize_and_binarize(const std::vector<TrialRatings>& trials) {
  std::map<std::string, std::vector<const TrialRatings*>> by_subject;
  for (const auto& t : trials) by_subject[t.participant_id].push_back(&t);

  NormalizedLabelTable table;
  for (const auto& [participant, rows] : by_subject) {
    if (rows.size() < 2) {
      throw ValidationError("participant " + participant +
                            " has a single rated video; per-subject std is undefined");
    }
    SubjectStats stats;
    for (std::size_t d = 0; d < kNumTasks; ++d) {
      const int id = static_cast<int>(d);
      double sum = 0;
      for (const auto* r : rows) {
        const auto it = r->ratings.find(id);
        if (it == r->ratings.end()) {
          throw ValidationError("(" + participant + ", " + r->video_id + ") lacks a rating for " +
                                std::string(dimension(id).name));
        }
        sum += it->second;
      }
      const double mean = sum / static_cast<double>(rows.size());
      double ss = 0;
      for (const auto* r : rows) ss += (r->ratings.at(id) - mean) * (r->ratings.at(id) - mean);
      stats.mean[d] = mean;
      stats.stddev[d] = std::sqrt(ss / static_cast<double>(rows.size()));
    }
    for (const auto* r : rows) {
      NormalizedTrial out;
      for (std::size_t d = 0; d < kNumTasks; ++d) {
        const int raw = r->ratings.at(static_cast<int>(d));
        const double z = stats.stddev[d] > 0 ? (raw - stats.mean[d]) / stats.stddev[d] : 0.0;
        out.z[d] = z;
        out.labels[d] = z > 0 ? 1 : z < 0 ? 0 : static_cast<std::uint8_t>(raw > 4);
      }
      table.trials[{participant, r->video_id}] = out;
    }
    table.subjects[participant] = stats;
  }
  return table;
}

}  // namespace gazenet::preprocess
