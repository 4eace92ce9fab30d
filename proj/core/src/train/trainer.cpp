#include "gazenet/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gazenet/error.hpp"

namespace gazenet {
namespace {

using Batch = std::vector<const preprocess::AlignedSample*>;

std::vector<Batch> make_batches(const Batch& samples, std::size_t batch_size) {
  std::vector<Batch> out;
  for (std::size_t i = 0; i < samples.size(); i += batch_size) {
    out.emplace_back(samples.begin() + static_cast<std::ptrdiff_t>(i),
                     samples.begin() + static_cast<std::ptrdiff_t>(std::min(samples.size(), i + batch_size)));
  }
  return out;
}

void shuffle(Batch& v, nn::Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

std::vector<TrainableParam> trainable(std::vector<ParamGroup<float>> groups, const FreezeMask* mask) {
  std::vector<TrainableParam> out;
  for (auto& g : groups) {
    for (auto& p : g.params) {
      const std::string key = g.name + "/" + p.name;
      out.push_back({key, p.param, mask ? mask->find(g.name, p.name) : nullptr});
    }
  }
  return out;
}

// Every value that defines the model's behavior: parameters and BN buffers.
struct Snapshot {
  std::vector<nn::AlignedVector<float>> values;

  static Snapshot take(const std::vector<ParamGroup<float>>& groups) {
    Snapshot s;
    for (const auto& g : groups) {
      for (const auto& p : g.params) s.values.push_back(p.param->value);
      for (const auto& b : g.buffers) s.values.push_back(*b.values);
    }
    return s;
  }
  void restore(const std::vector<ParamGroup<float>>& groups) const {
    std::size_t i = 0;
    for (const auto& g : groups) {
      for (const auto& p : g.params) p.param->value = values[i++];
      for (const auto& b : g.buffers) *b.values = values[i++];
    }
  }
};

struct StageSpec {
  std::string name;
  Phase phase;
  std::size_t epochs;
  std::vector<ParamGroup<float>> groups;  // optimized and snapshotted
  const FreezeMask* mask = nullptr;
  TemporalHeads<float>* heads = nullptr;
};

StageResult run_stage(DualBranchModel<float>& model, const StageSpec& spec, const TrainData& data,
                      const TrainConfig& config, TrainHistory& history) {
  config.validate();
  if (data.train.empty()) throw TrainingError(spec.name + ": empty training set");
  const std::size_t n_tasks = model.config().n_tasks;
  Adam adam(trainable(spec.groups, spec.mask), config);
  nn::Rng rng(group_seed(config.seed, "shuffle." + spec.name));
  const bool has_val = !data.val.empty();

  StageResult result;
  double best_val = std::numeric_limits<double>::infinity();
  Snapshot best;
  Batch order = data.train;

  for (std::size_t epoch = 1; epoch <= spec.epochs; ++epoch) {
    shuffle(order, rng);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (const auto& batch : make_batches(order, config.batch_size)) {
      const auto input = assemble_input<float>(model.config(), batch, InferenceMode::kFullMultimodal,
                                               nullptr, data.mask);
      adam.zero_grad();
      const auto B = static_cast<Eigen::Index>(batch.size());
      const double scale = 1.0 / static_cast<double>(n_tasks * batch.size());
      double batch_loss = 0.0;
      DualBranchModel<float>::RunOptions options;
      options.training = true;
      options.phase = spec.phase;
      options.temporal_heads = spec.heads;
      model.run(input, options, [&](std::size_t k, const Matrix<float>& logits) {
        Matrix<float> d(1, B);
        for (Eigen::Index b = 0; b < B; ++b) {
          const double p = nn::sigmoid(static_cast<double>(logits(0, b)));
          const double y = batch[static_cast<std::size_t>(b)]->labels[k];
          const double pc = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
          batch_loss -= (y > 0 ? std::log(pc) : std::log(1.0 - pc)) / static_cast<double>(n_tasks);
          // The clamp has zero slope outside its range.
          d(0, b) = pc == p ? static_cast<float>((p - y) * scale) : 0.0f;
        }
        return d;
      });
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << spec.name << ": non-finite training loss at epoch " << epoch << ", batch " << batch_index;
        throw TrainingError(msg.str());
      }
      adam.step();
      loss_sum += batch_loss;
      ++batch_index;
    }

    EpochRecord rec;
    rec.stage = spec.name;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_loss = std::numeric_limits<double>::quiet_NaN();
    rec.train_accuracy = std::numeric_limits<double>::quiet_NaN();
    if (has_val) {
      auto m = measure(model, data.val, data.mask, spec.phase, spec.heads, config.batch_size);
      rec.val_loss = m.loss;
      rec.val_accuracy = m.report.per_dimension;
      if (!std::isfinite(m.loss)) throw TrainingError(spec.name + ": non-finite validation loss");
    }
    if (config.target_train_accuracy) {
      rec.train_accuracy =
          measure(model, data.train, data.mask, spec.phase, spec.heads, config.batch_size).report.overall;
    }
    history.epochs.push_back(rec);
    if (config.on_epoch) config.on_epoch(rec);
    result.epochs_run = epoch;

    if (config.target_train_accuracy && rec.train_accuracy >= *config.target_train_accuracy) {
      result.reached_target = true;
      result.best_epoch = epoch;
      break;
    }
    if (has_val) {
      if (rec.val_loss < best_val) {
        best_val = rec.val_loss;
        result.best_epoch = epoch;
        best = Snapshot::take(spec.groups);
      } else if (epoch - result.best_epoch >= config.patience) {
        result.early_stopped = true;
        break;
      }
    } else {
      result.best_epoch = epoch;
    }
  }
  if (has_val && !result.reached_target && result.best_epoch != result.epochs_run) {
    best.restore(spec.groups);
  }
  result.optimizer_steps = adam.steps();
  return result;
}

std::vector<ParamGroup<float>> temporal_groups(DualBranchModel<float>& model) {
  std::vector<ParamGroup<float>> out;
  for (auto& g : model.groups()) {
    if (g.name.rfind("temporal.", 0) == 0) out.push_back(g);
  }
  return out;
}

}  // namespace

// ------------------------------------------------------------------ config

void TrainConfig::validate() const {
  if (stage1_epochs < 1 || stage3_epochs < 1) throw ConfigError("train: epochs must be at least 1");
  if (!(learning_rate > 0)) throw ConfigError("train.learning_rate must be positive");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw ConfigError("train: Adam betas must be in [0, 1)");
  if (!(epsilon > 0)) throw ConfigError("train.epsilon must be positive");
  if (batch_size < 1) throw ConfigError("train.batch_size must be at least 1");
  if (!(freeze_fraction >= 0 && freeze_fraction <= 1)) throw ConfigError("train.freeze_fraction must be in [0, 1]");
  if (patience < 1) throw ConfigError("train.patience must be at least 1");
}

void TrainConfig::write(KeyValueDocument& doc) const {
  auto& g = doc.globals;
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };
  g["train.stage1_epochs"] = std::to_string(stage1_epochs);
  g["train.stage3_epochs"] = std::to_string(stage3_epochs);
  g["train.learning_rate"] = num(learning_rate);
  g["train.beta1"] = num(beta1);
  g["train.beta2"] = num(beta2);
  g["train.epsilon"] = num(epsilon);
  g["train.batch_size"] = std::to_string(batch_size);
  g["train.freeze_fraction"] = num(freeze_fraction);
  g["train.seed"] = std::to_string(seed);
  g["train.patience"] = std::to_string(patience);
  if (target_train_accuracy) g["train.target_train_accuracy"] = num(*target_train_accuracy);
  if (freeze_mask_seed) g["train.freeze_mask_seed"] = std::to_string(*freeze_mask_seed);
}

TrainConfig TrainConfig::read(const KeyValueDocument& doc) { return read(doc, TrainConfig()); }

TrainConfig TrainConfig::read(const KeyValueDocument& doc, TrainConfig c) {
  const auto& g = doc.globals;
  auto count = [&](const char* key, std::size_t& dst) {
    const auto v = get_int(g, key, static_cast<long long>(dst));
    if (v < 0) throw ConfigError(std::string(key) + " must be nonnegative");
    dst = static_cast<std::size_t>(v);
  };
  count("train.stage1_epochs", c.stage1_epochs);
  count("train.stage3_epochs", c.stage3_epochs);
  c.learning_rate = get_double(g, "train.learning_rate", c.learning_rate);
  c.beta1 = get_double(g, "train.beta1", c.beta1);
  c.beta2 = get_double(g, "train.beta2", c.beta2);
  c.epsilon = get_double(g, "train.epsilon", c.epsilon);
  count("train.batch_size", c.batch_size);
  c.freeze_fraction = get_double(g, "train.freeze_fraction", c.freeze_fraction);
  c.seed = static_cast<std::uint64_t>(get_int(g, "train.seed", static_cast<long long>(c.seed)));
  count("train.patience", c.patience);
  if (lookup(g, "train.target_train_accuracy")) {
    c.target_train_accuracy = require_double(g, "train.target_train_accuracy");
  }
  if (lookup(g, "train.freeze_mask_seed")) {
    c.freeze_mask_seed = static_cast<std::uint64_t>(require_int(g, "train.freeze_mask_seed"));
  }
  c.validate();
  return c;
}

// -------------------------------------------------------------- freeze mask

std::size_t FreezeMask::frozen_count() const {
  std::size_t n = 0;
  for (const auto& [key, m] : entries) n += static_cast<std::size_t>(std::count(m.begin(), m.end(), 1));
  return n;
}

const std::vector<std::uint8_t>* FreezeMask::find(const std::string& group, const std::string& param) const {
  auto it = entries.find(group + "/" + param);
  return it == entries.end() ? nullptr : &it->second;
}

// --------------------------------------------------------------------- Adam

Adam::Adam(std::vector<TrainableParam> params, const TrainConfig& config)
    : params_(std::move(params)),
      lr_(config.learning_rate),
      beta1_(config.beta1),
      beta2_(config.beta2),
      eps_(config.epsilon) {
  for (const auto& p : params_) {
    if (p.frozen && p.frozen->size() != p.param->size()) {
      throw ShapeError("freeze mask for " + p.key + " does not match the parameter size");
    }
    m_.emplace_back(p.param->size(), 0.0f);
    v_.emplace_back(p.param->size(), 0.0f);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.param->zero_grad();
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const auto b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
  const auto step_size = static_cast<float>(lr_ / c1);
  const auto inv_c2 = static_cast<float>(1.0 / c2);
  const auto eps = static_cast<float>(eps_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = *params_[i].param;
    const auto* frozen = params_[i].frozen;
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (frozen && (*frozen)[j]) continue;
      const float g = p.grad[j];
      m[j] = b1 * m[j] + (1.0f - b1) * g;
      v[j] = b2 * v[j] + (1.0f - b2) * g * g;
      p.value[j] -= step_size * m[j] / (std::sqrt(v[j] * inv_c2) + eps);
    }
  }
}

// ------------------------------------------------------------------ history

std::string TrainHistory::to_csv() const {
  std::ostringstream out;
  out.precision(9);
  out << "stage,epoch,train_loss,val_loss,train_accuracy";
  for (const auto& d : active_dimensions()) out << ",val_acc_" << d.name;
  out << "\n";
  for (const auto& e : epochs) {
    out << e.stage << ',' << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.train_accuracy;
    for (std::size_t k = 0; k < kNumTasks; ++k) {
      out << ',';
      if (k < e.val_accuracy.size()) out << e.val_accuracy[k];
    }
    out << "\n";
  }
  return out.str();
}

// ----------------------------------------------------------------- measure

LossAndAccuracy measure(DualBranchModel<float>& model, const Batch& samples, ModalityMask mask, Phase phase,
                        TemporalHeads<float>* heads, std::size_t batch_size, InferenceMode mode,
                        const ModalityStats* stats) {
  if (samples.empty()) throw ValidationError("evaluation needs at least one trial");
  const std::size_t n_tasks = model.config().n_tasks;
  std::vector<std::vector<double>> probs;
  std::vector<preprocess::Labels> labels;
  double loss = 0.0;
  for (const auto& batch : make_batches(samples, std::max<std::size_t>(1, batch_size))) {
    const auto input = assemble_input<float>(model.config(), batch, mode, stats, mask);
    DualBranchModel<float>::RunOptions options;
    options.phase = phase;
    options.temporal_heads = heads;
    const Matrix<float> logits = model.run(input, options);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      std::vector<double> p(n_tasks);
      for (std::size_t k = 0; k < n_tasks; ++k) {
        p[k] = nn::sigmoid(static_cast<double>(logits(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(b))));
      }
      loss += bce_loss(p, std::span<const std::uint8_t>(batch[b]->labels.data(), n_tasks));
      probs.push_back(std::move(p));
      labels.push_back(batch[b]->labels);
    }
  }
  LossAndAccuracy out;
  out.loss = loss / static_cast<double>(samples.size());
  out.report = score_predictions(probs, labels);
  out.report.mode = to_string(mode);
  return out;
}

// ------------------------------------------------------------------ stages

StageResult stage1_pretrain(DualBranchModel<float>& model, TemporalHeads<float>& heads, const TrainData& data,
                            const TrainConfig& config, TrainHistory& history) {
  config.validate();
  if (heads.heads.size() != model.config().n_tasks) throw ConfigError("stage 1: one temporary head per task required");
  StageSpec spec{"stage1", Phase::kTemporalOnly, config.stage1_epochs, temporal_groups(model), nullptr, &heads};
  spec.groups.push_back(heads.group());
  return run_stage(model, spec, data, config, history);
}

FreezeMask stage2_transfer(const nn::LstmStack<float>& source, DualBranchModel<float>& model,
                           std::uint64_t seed, double freeze_fraction, std::optional<std::uint64_t> mask_seed) {
  auto& dst = model.spatial.shared_lstm;
  if (source.layers.size() != dst.layers.size()) {
    throw ShapeError("stage 2: source has " + std::to_string(source.layers.size()) +
                     " LSTM layers, destination " + std::to_string(dst.layers.size()));
  }
  if (!(freeze_fraction >= 0 && freeze_fraction <= 1)) throw ConfigError("freeze fraction must be in [0, 1]");
  for (std::size_t i = 0; i < dst.layers.size(); ++i) {
    if (source.layers[i].hidden_size() != dst.layers[i].hidden_size()) {
      throw ShapeError("stage 2: hidden size mismatch (" + std::to_string(source.layers[i].hidden_size()) +
                       " vs " + std::to_string(dst.layers[i].hidden_size()) + ")");
    }
  }
  nn::Rng rng(group_seed(seed, "spatial.shared_lstm.input_weights"));
  FreezeMask mask;
  const std::size_t H = dst.layers.front().hidden_size();
  // Guard against round-up such as 0.07 * 100 = 7.000000000000001.
  const auto rows = static_cast<std::size_t>(std::ceil(freeze_fraction * static_cast<double>(H) - 1e-9));
  mask.frozen_rows_per_gate = rows;
  for (std::size_t i = 0; i < dst.layers.size(); ++i) {
    auto& layer = dst.layers[i];
    // Copy values only; the input weights are redrawn.
    std::copy(source.layers[i].w_hh.value.begin(), source.layers[i].w_hh.value.end(), layer.w_hh.value.begin());
    std::copy(source.layers[i].bias.value.begin(), source.layers[i].bias.value.end(), layer.bias.value.begin());
    layer.init_input_weights(rng);

    std::vector<std::size_t> units(H);
    for (std::size_t u = 0; u < H; ++u) units[u] = u;
    if (mask_seed) {
      nn::Rng mrng(group_seed(*mask_seed, "freeze.layer" + std::to_string(i)));
      for (std::size_t u = H; u > 1; --u) std::swap(units[u - 1], units[mrng() % u]);
    }
    std::vector<std::uint8_t> m(layer.w_hh.size(), 0);
    for (std::size_t gate = 0; gate < 4; ++gate) {
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t row = gate * H + units[r];
        std::fill(m.begin() + static_cast<std::ptrdiff_t>(row * H),
                  m.begin() + static_cast<std::ptrdiff_t>((row + 1) * H), 1);
      }
    }
    mask.entries["spatial.shared_lstm/layer" + std::to_string(i) + ".w_hh"] = std::move(m);
  }
  return mask;
}

FreezeMask stage2_transfer(DualBranchModel<float>& model, const TrainConfig& config) {
  return stage2_transfer(model.temporal.shared_lstm, model, config.seed, config.freeze_fraction,
                         config.freeze_mask_seed);
}

StageResult stage3_joint_finetune(DualBranchModel<float>& model, const FreezeMask& mask, const TrainData& data,
                                  const TrainConfig& config, TrainHistory& history) {
  StageSpec spec{"stage3", Phase::kJoint, config.stage3_epochs, model.groups(), &mask, nullptr};
  return run_stage(model, spec, data, config, history);
}

TrainingOutcome train_three_stage(DualBranchModel<float>& model, const TrainData& data, const TrainConfig& config) {
  config.validate();
  TrainingOutcome out;
  TemporalHeads<float> heads(model.config());
  heads.init(config.seed);
  out.stage1 = stage1_pretrain(model, heads, data, config, out.history);
  out.freeze_mask = stage2_transfer(model, config);
  out.stage3 = stage3_joint_finetune(model, out.freeze_mask, data, config, out.history);
  return out;
}

AccuracyReport evaluate(DualBranchModel<float>& model, const Batch& trials, InferenceMode mode,
                        const ModalityStats* stats, double threshold, ModalityMask mask, std::size_t batch_size) {
  if (trials.empty()) throw ValidationError("evaluation needs at least one trial");
  if (threshold == 0.5) {
    return measure(model, trials, mask, Phase::kJoint, nullptr, batch_size, mode, stats).report;
  }
  std::vector<std::vector<double>> probs;
  std::vector<preprocess::Labels> labels;
  const std::size_t n_tasks = model.config().n_tasks;
  for (const auto& batch : make_batches(trials, batch_size)) {
    const auto p = model.predict(assemble_input<float>(model.config(), batch, mode, stats, mask));
    for (std::size_t b = 0; b < batch.size(); ++b) {
      std::vector<double> row(n_tasks);
      for (std::size_t k = 0; k < n_tasks; ++k) row[k] = p(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(b));
      probs.push_back(std::move(row));
      labels.push_back(batch[b]->labels);
    }
  }
  auto report = score_predictions(probs, labels, threshold);
  report.mode = to_string(mode);
  return report;
}

}  // namespace gazenet
