#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gazenet/dimensions.hpp"
#include "gazenet/kv.hpp"
#include "gazenet/preprocess/labels.hpp"

namespace gazenet {

inline constexpr double kProbabilityClamp = 1e-7;

// Mean binary cross-entropy over the given dimensions, probabilities clamped
// to [1e-7, 1 - 1e-7].
double bce_loss(std::span<const double> probs, std::span<const std::uint8_t> labels);

// Accuracy per dimension plus the unweighted category means.
struct AccuracyReport {
  std::vector<double> per_dimension;  // indexed by dimension id
  double objective = 0.0;
  double subjective = 0.0;
  double overall = 0.0;
  std::size_t trials = 0;
  std::string mode;

  // Aggregates over the objective dimensions (ids 0..3) and the subjective
  // ones present in `per_dimension`.
  static AccuracyReport from_per_dimension(std::vector<double> per_dimension, std::size_t trials = 0);

  // Structured text; round-trips through read().
  std::string serialize() const;
  static AccuracyReport read(const KeyValueDocument& doc);
  bool operator==(const AccuracyReport&) const = default;
};

// Accuracy of thresholded probabilities against labels. probs[i] holds one
// value per dimension for trial i.
AccuracyReport score_predictions(const std::vector<std::vector<double>>& probs,
                                 const std::vector<preprocess::Labels>& labels, double threshold = 0.5);

}  // namespace gazenet
