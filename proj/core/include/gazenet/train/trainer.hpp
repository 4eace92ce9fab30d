#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gazenet/model/model.hpp"
#include "gazenet/train/metrics.hpp"

namespace gazenet {

struct TrainConfig {
  std::size_t stage1_epochs = 50;
  std::size_t stage3_epochs = 50;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 2;
  double freeze_fraction = 0.30;
  std::uint64_t seed = 1;
  std::size_t patience = 10;
  // Stop a stage once eval-mode training accuracy reaches this value.
  std::optional<double> target_train_accuracy;
  // Random rows instead of the leading-prefix freeze rule.
  std::optional<std::uint64_t> freeze_mask_seed;
  // Called after every epoch; not part of the serialized config.
  std::function<void(const struct EpochRecord&)> on_epoch;

  void validate() const;
  // Keys are prefixed "train.".
  void write(KeyValueDocument& doc) const;
  static TrainConfig read(const KeyValueDocument& doc);
  static TrainConfig read(const KeyValueDocument& doc, TrainConfig defaults);
};

// Entries of transferred hidden-to-hidden matrices that stay fixed during
// joint fine-tuning, keyed "group/param".
struct FreezeMask {
  std::map<std::string, std::vector<std::uint8_t>> entries;
  std::size_t frozen_rows_per_gate = 0;

  std::size_t frozen_count() const;
  const std::vector<std::uint8_t>* find(const std::string& group, const std::string& param) const;
};

struct TrainableParam {
  std::string key;  // "group/param"
  nn::Param<float>* param;
  const std::vector<std::uint8_t>* frozen = nullptr;
};

class Adam {
 public:
  Adam(std::vector<TrainableParam> params, const TrainConfig& config);
  // Masked entries keep their value and moment estimates.
  void step();
  void zero_grad();
  std::size_t steps() const { return t_; }
  const std::vector<TrainableParam>& params() const { return params_; }

 private:
  std::vector<TrainableParam> params_;
  std::vector<std::vector<float>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

struct EpochRecord {
  std::string stage;
  std::size_t epoch = 0;  // 1-based within the stage
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN when there is no validation set
  double train_accuracy = 0.0;  // NaN unless measured
  std::vector<double> val_accuracy;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  std::string to_csv() const;
};

struct StageResult {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;  // epoch whose parameters were kept
  bool early_stopped = false;
  bool reached_target = false;
  std::size_t optimizer_steps = 0;
};

struct TrainData {
  std::vector<const preprocess::AlignedSample*> train;
  std::vector<const preprocess::AlignedSample*> val;
  ModalityMask mask;
};

// Mean BCE loss and per-dimension accuracy of a model in evaluation mode.
struct LossAndAccuracy {
  double loss = 0.0;
  AccuracyReport report;
};
LossAndAccuracy measure(DualBranchModel<float>& model, const std::vector<const preprocess::AlignedSample*>& samples,
                        ModalityMask mask, Phase phase, TemporalHeads<float>* heads,
                        std::size_t batch_size, InferenceMode mode = InferenceMode::kFullMultimodal,
                        const ModalityStats* stats = nullptr);

// Temporal branch plus temporary heads; the spatial branch is not touched.
StageResult stage1_pretrain(DualBranchModel<float>& model, TemporalHeads<float>& heads,
                            const TrainData& data, const TrainConfig& config, TrainHistory& history);

// Copies hidden-to-hidden weights and biases of every shared temporal LSTM
// layer into the spatial shared LSTM and re-draws its input weights.
FreezeMask stage2_transfer(const nn::LstmStack<float>& source, DualBranchModel<float>& model,
                           std::uint64_t seed, double freeze_fraction,
                           std::optional<std::uint64_t> mask_seed = std::nullopt);
FreezeMask stage2_transfer(DualBranchModel<float>& model, const TrainConfig& config);

StageResult stage3_joint_finetune(DualBranchModel<float>& model, const FreezeMask& mask,
                                  const TrainData& data, const TrainConfig& config,
                                  TrainHistory& history);

// Stage 1 + 2 + 3 from a freshly initialized model.
struct TrainingOutcome {
  StageResult stage1, stage3;
  FreezeMask freeze_mask;
  TrainHistory history;
};
TrainingOutcome train_three_stage(DualBranchModel<float>& model, const TrainData& data,
                                  const TrainConfig& config);

AccuracyReport evaluate(DualBranchModel<float>& model,
                        const std::vector<const preprocess::AlignedSample*>& trials,
                        InferenceMode mode, const ModalityStats* stats = nullptr,
                        double threshold = 0.5, ModalityMask mask = {}, std::size_t batch_size = 4);

}  // namespace gazenet
