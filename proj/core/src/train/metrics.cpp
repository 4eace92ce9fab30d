#include "gazenet/train/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gazenet/error.hpp"

namespace gazenet {

double bce_loss(std::span<const double> probs, std::span<const std::uint8_t> labels) {
  if (probs.size() != labels.size() || probs.empty()) {
    throw ShapeError("bce_loss: probabilities and labels must have the same nonzero length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    total -= labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(probs.size());
}

AccuracyReport AccuracyReport::from_per_dimension(std::vector<double> per_dimension, std::size_t trials) {
  if (per_dimension.empty() || per_dimension.size() > kNumTasks) {
    throw ValidationError("accuracy report needs between 1 and 15 dimensions");
  }
  AccuracyReport r;
  r.per_dimension = std::move(per_dimension);
  r.trials = trials;
  double obj = 0, subj = 0, all = 0;
  std::size_t n_obj = 0, n_subj = 0;
  for (std::size_t id = 0; id < r.per_dimension.size(); ++id) {
    const double a = r.per_dimension[id];
    all += a;
    if (dimension(static_cast<int>(id)).category == Category::kObjective) {
      obj += a;
      ++n_obj;
    } else {
      subj += a;
      ++n_subj;
    }
  }
  r.objective = n_obj ? obj / static_cast<double>(n_obj) : 0.0;
  r.subjective = n_subj ? subj / static_cast<double>(n_subj) : 0.0;
  r.overall = all / static_cast<double>(r.per_dimension.size());
  return r;
}

std::string AccuracyReport::serialize() const {
  KeyValueDocument doc;
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  doc.globals["mode"] = mode.empty() ? "full" : mode;
  doc.globals["trials"] = std::to_string(trials);
  doc.globals["objective"] = fmt(objective);
  doc.globals["subjective"] = fmt(subjective);
  doc.globals["overall"] = fmt(overall);
  doc.globals["dimensions"] = std::to_string(per_dimension.size());
  for (std::size_t id = 0; id < per_dimension.size(); ++id) {
    doc.globals["accuracy." + std::string(dimension(static_cast<int>(id)).name)] = fmt(per_dimension[id]);
  }
  return doc.serialize();
}

AccuracyReport AccuracyReport::read(const KeyValueDocument& doc) {
  const auto n = static_cast<std::size_t>(require_int(doc.globals, "dimensions"));
  if (n == 0 || n > kNumTasks) throw FormatError("accuracy report: bad dimension count");
  std::vector<double> per(n);
  for (std::size_t id = 0; id < n; ++id) {
    per[id] = require_double(doc.globals, "accuracy." + std::string(dimension(static_cast<int>(id)).name));
  }
  auto r = from_per_dimension(std::move(per), static_cast<std::size_t>(require_int(doc.globals, "trials")));
  r.mode = require_string(doc.globals, "mode");
  return r;
}

AccuracyReport score_predictions(const std::vector<std::vector<double>>& probs,
                                 const std::vector<preprocess::Labels>& labels, double threshold) {
  if (probs.empty()) throw ValidationError("evaluation needs at least one trial");
  if (probs.size() != labels.size()) throw ShapeError("predictions and labels disagree on trial count");
  const std::size_t dims = probs.front().size();
  std::vector<double> correct(dims, 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i].size() != dims) throw ShapeError("ragged prediction rows");
    for (std::size_t k = 0; k < dims; ++k) {
      const bool predicted = probs[i][k] > threshold;
      if (predicted == (labels[i][k] != 0)) correct[k] += 1.0;
    }
  }
  for (auto& c : correct) c /= static_cast<double>(probs.size());
  return AccuracyReport::from_per_dimension(std::move(correct), probs.size());
}

}  // namespace gazenet
