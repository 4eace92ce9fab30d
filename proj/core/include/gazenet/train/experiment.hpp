#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gazenet/model/config.hpp"
#include "gazenet/split.hpp"
#include "gazenet/train/trainer.hpp"

namespace gazenet {

struct ExperimentConfig {
  ModelConfig model;
  TrainConfig train;
  SplitRatios split;
  std::uint64_t split_seed = 1;

  // Flat keys: model.*, train.*, split.train, split.val, split.test, split.seed.
  void write(KeyValueDocument& doc) const;
  static ExperimentConfig read(const KeyValueDocument& doc);
};

// Preprocessed samples held in memory, split by participant.
struct Dataset {
  std::vector<preprocess::AlignedSample> samples;
  SplitAssignment split;

  std::vector<const preprocess::AlignedSample*> members(Split which) const;
};

// Loads every sample listed in <dir>/samples.txt. Streams not selected are
// never opened.
Dataset load_dataset(const std::filesystem::path& samples_dir, const SplitRatios& ratios, std::uint64_t split_seed,
                     preprocess::StreamSelection streams = {});

struct ExperimentResult {
  TrainingOutcome training;
  std::optional<ModalityStats> stats;  // only when both gaze streams are used
  AccuracyReport test;                 // full mode (masked streams zeroed)
  std::optional<AccuracyReport> test_video_only;  // mean-fill, full mask only
};

// Initializes `model` from the training seed, runs the three stages and
// evaluates on the test split. When `out_dir` is given the run is recorded
// there (config, seeds, checkpoints, history, reports).
ExperimentResult run_experiment(DualBranchModel<float>& model, const Dataset& data, const ExperimentConfig& config,
                                ModalityMask mask = {},
                                const std::optional<std::filesystem::path>& out_dir = std::nullopt);

enum class AblationVariant { kFull, kNoAttention, kNoPupil, kNeither };

inline constexpr AblationVariant kAblationVariants[] = {AblationVariant::kFull, AblationVariant::kNoAttention,
                                                        AblationVariant::kNoPupil, AblationVariant::kNeither};

ModalityMask mask_for(AblationVariant variant);
std::string to_string(AblationVariant variant);  // full, no_attention, no_pupil, neither
AblationVariant parse_ablation_variant(const std::string& text);
std::string row_label(AblationVariant variant);  // table row label

// One variant, trained and evaluated from the samples directory. Only the
// streams the variant consumes are read.
AccuracyReport run_ablation(const ExperimentConfig& config, AblationVariant variant,
                            const std::filesystem::path& samples_dir,
                            const std::optional<std::filesystem::path>& out_dir = std::nullopt);

struct AblationRow {
  AblationVariant variant;
  AccuracyReport report;
};

// Plain-text tables.
std::string render_objective_table(const AccuracyReport& report);
std::string render_subjective_table(const AccuracyReport& report);
std::string render_ablation_table(const std::vector<AblationRow>& rows);

}  // namespace gazenet
