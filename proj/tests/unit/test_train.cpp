#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "gazenet/error.hpp"
#include "gazenet/kv.hpp"
#include "gazenet/model/checkpoint.hpp"
#include "gazenet/train/experiment.hpp"

namespace gazenet {
namespace {

namespace fs = std::filesystem;
using preprocess::AlignedSample;
using preprocess::Labels;

std::vector<const AlignedSample*> pointers(const std::vector<AlignedSample>& v, std::size_t from = 0,
                                           std::size_t to = SIZE_MAX) {
  std::vector<const AlignedSample*> out;
  for (std::size_t i = from; i < std::min(to, v.size()); ++i) out.push_back(&v[i]);
  return out;
}

// ----------------------------------------------------------------- metrics

TEST(Bce, PerfectPredictionIsNearZero) {
  Labels y{};
  std::vector<double> p(kNumTasks);
  for (std::size_t k = 0; k < kNumTasks; ++k) {
    y[k] = static_cast<std::uint8_t>(k % 2);
    p[k] = y[k];
  }
  EXPECT_LT(bce_loss(p, y), 1e-5);
}

TEST(Bce, HalfEverywhereIsLnTwo) {
  Labels y{};
  y[3] = 1;
  const std::vector<double> p(kNumTasks, 0.5);
  EXPECT_NEAR(bce_loss(p, y), std::log(2.0), 1e-12);
}

TEST(Bce, OppositePredictionHitsTheClamp) {
  Labels y{};
  std::vector<double> p(kNumTasks);
  for (std::size_t k = 0; k < kNumTasks; ++k) {
    y[k] = static_cast<std::uint8_t>(k % 3 == 0);
    p[k] = 1.0 - y[k];
  }
  EXPECT_NEAR(bce_loss(p, y), -std::log(1e-7), 1e-6);
  EXPECT_NEAR(bce_loss(p, y), 16.118, 1e-3);
}

TEST(Metrics, HandCountedAccuracies) {
  // Four trials; dimension k is right on (k % 5) of them, capped at 4.
  std::vector<std::vector<double>> probs(4, std::vector<double>(kNumTasks));
  std::vector<Labels> labels(4);
  std::vector<double> expected(kNumTasks);
  for (std::size_t k = 0; k < kNumTasks; ++k) {
    const std::size_t right = std::min<std::size_t>(k % 5, 4);
    expected[k] = static_cast<double>(right) / 4.0;
    for (std::size_t i = 0; i < 4; ++i) {
      labels[i][k] = static_cast<std::uint8_t>((i + k) % 2);
      const bool correct = i < right;
      probs[i][k] = (labels[i][k] == 1) == correct ? 0.9 : 0.1;
    }
  }
  const auto r = score_predictions(probs, labels);
  ASSERT_EQ(r.per_dimension.size(), kNumTasks);
  for (std::size_t k = 0; k < kNumTasks; ++k) EXPECT_EQ(r.per_dimension[k], expected[k]) << k;
  EXPECT_DOUBLE_EQ(r.objective, (expected[0] + expected[1] + expected[2] + expected[3]) / 4);
  double subj = 0;
  for (std::size_t k = 4; k < kNumTasks; ++k) subj += expected[k];
  EXPECT_DOUBLE_EQ(r.subjective, subj / 11);
  EXPECT_EQ(r.trials, 4u);
}

TEST(Metrics, ThresholdIsStrict) {
  std::vector<std::vector<double>> probs{std::vector<double>(kNumTasks, 0.5)};
  std::vector<Labels> labels(1);
  EXPECT_EQ(score_predictions(probs, labels).overall, 1.0);
  labels[0].fill(1);
  EXPECT_EQ(score_predictions(probs, labels).overall, 0.0);
}

TEST(Metrics, AllCorrectOnFiveTrials) {
  std::mt19937_64 rng(1);
  std::vector<std::vector<double>> probs;
  std::vector<Labels> labels(5);
  for (auto& l : labels) {
    std::vector<double> row;
    for (auto& v : l) {
      v = static_cast<std::uint8_t>(rng() % 2);
      row.push_back(v ? 0.8 : 0.2);
    }
    probs.push_back(row);
  }
  const auto r = score_predictions(probs, labels);
  for (double a : r.per_dimension) EXPECT_EQ(a, 1.0);
  EXPECT_EQ(r.objective, 1.0);
  EXPECT_EQ(r.subjective, 1.0);
}

TEST(Metrics, KnownPerDimensionValuesGiveCategoryMeans) {
  std::vector<double> v{0.743, 0.743, 0.743, 0.657,                                             // objective
                        0.629, 0.657, 0.629, 0.657, 0.657, 0.743, 0.657, 0.714, 0.686, 0.686, 0.629};
  const auto r = AccuracyReport::from_per_dimension(v);
  EXPECT_NEAR(r.objective, 0.7215, 1e-12);
  EXPECT_LE(std::abs(r.objective - 0.722), 0.0005 + 1e-12);
  EXPECT_LE(std::abs(r.subjective - 0.668), 0.0005);
}

TEST(Metrics, ReportRoundTripsThroughText) {
  auto r = AccuracyReport::from_per_dimension(std::vector<double>(kNumTasks, 1.0 / 3.0), 9);
  r.mode = "video-only-mean";
  const auto back = AccuracyReport::read(KeyValueDocument::parse(r.serialize(), "report"));
  EXPECT_EQ(back, r);
}

// ------------------------------------------------------------------ config

TEST(TrainConfig, ZeroEpochsRejected) {
  TrainConfig c;
  c.stage1_epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.stage1_epochs = 1;
  c.freeze_fraction = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(TrainConfig, TextRoundTrip) {
  TrainConfig c;
  c.stage1_epochs = 7;
  c.learning_rate = 3e-4;
  c.target_train_accuracy = 0.95;
  c.freeze_mask_seed = 12;
  KeyValueDocument doc;
  c.write(doc);
  const auto back = TrainConfig::read(doc);
  EXPECT_EQ(back.stage1_epochs, 7u);
  EXPECT_EQ(back.learning_rate, 3e-4);
  EXPECT_EQ(back.target_train_accuracy, 0.95);
  EXPECT_EQ(back.freeze_mask_seed, 12u);
}

// -------------------------------------------------------------------- Adam

TEST(Adam, FirstStepsMatchTheUpdateRule) {
  nn::Param<float> p("w", {3});
  p.value = {1.0f, -2.0f, 0.5f};
  const std::vector<std::uint8_t> frozen{0, 1, 0};
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  Adam adam({{"g/w", &p, &frozen}}, cfg);
  const std::vector<std::vector<float>> grads{{0.5f, 3.0f, -2.0f}, {-1.0f, 1.0f, 4.0f}};
  double m[3] = {0, 0, 0}, v[3] = {0, 0, 0}, w[3] = {1.0, -2.0, 0.5};
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    p.grad.assign(grads[t - 1].begin(), grads[t - 1].end());
    adam.step();
    for (int j = 0; j < 3; ++j) {
      if (j == 1) continue;
      const double g = grads[t - 1][static_cast<std::size_t>(j)];
      m[j] = 0.9 * m[j] + 0.1 * g;
      v[j] = 0.999 * v[j] + 0.001 * g * g;
      const double mh = m[j] / (1 - std::pow(0.9, static_cast<double>(t)));
      const double vh = v[j] / (1 - std::pow(0.999, static_cast<double>(t)));
      w[j] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  EXPECT_NEAR(p.value[0], w[0], 1e-5);
  EXPECT_NEAR(p.value[2], w[2], 1e-5);
  EXPECT_EQ(p.value[1], -2.0f);
  EXPECT_EQ(adam.steps(), 2u);
}

// ------------------------------------------------------------------ stage 2

TEST(Stage2, DefaultWidthFreezesThirtyNineRowsPerGate) {
  ModelConfig cfg;
  DualBranchModel<float> model(cfg);
  model.init(3);
  const auto mask = stage2_transfer(model, TrainConfig{});
  EXPECT_EQ(mask.frozen_rows_per_gate, 39u);
  EXPECT_EQ(mask.frozen_count(), 2u * 4u * 39u * 128u);
  const auto* m = mask.find("spatial.shared_lstm", "layer0.w_hh");
  ASSERT_NE(m, nullptr);
  for (std::size_t gate = 0; gate < 4; ++gate) {
    for (std::size_t r = 0; r < 128; ++r) {
      const bool expect = r < 39;
      EXPECT_EQ((*m)[(gate * 128 + r) * 128], expect ? 1 : 0);
      EXPECT_EQ((*m)[(gate * 128 + r) * 128 + 127], expect ? 1 : 0);
    }
  }
}

TEST(Stage2, CopiesRecurrentWeightsAndRedrawsInputWeights) {
  const auto cfg = testing::miniature_config();
  DualBranchModel<float> model(cfg);
  model.init(5);
  const auto before_ih = model.spatial.shared_lstm.layers[0].w_ih.value;
  stage2_transfer(model, TrainConfig{});
  for (std::size_t i = 0; i < model.spatial.shared_lstm.layers.size(); ++i) {
    const auto& src = model.temporal.shared_lstm.layers[i];
    const auto& dst = model.spatial.shared_lstm.layers[i];
    EXPECT_EQ(dst.w_hh.value, src.w_hh.value);
    EXPECT_EQ(dst.bias.value, src.bias.value);
    EXPECT_NE(dst.w_ih.value, src.w_ih.value);
  }
  EXPECT_NE(model.spatial.shared_lstm.layers[0].w_ih.value, before_ih);
}

TEST(Stage2, ExactProductsDoNotRoundUp) {
  auto cfg = testing::miniature_config();
  cfg.lstm_hidden = 100;
  DualBranchModel<float> model(cfg);
  model.init(1);
  // 0.07 * 100 evaluates to 7.000000000000001 in binary.
  EXPECT_EQ(stage2_transfer(model.temporal.shared_lstm, model, 1, 0.07).frozen_rows_per_gate, 7u);
  EXPECT_EQ(stage2_transfer(model.temporal.shared_lstm, model, 1, 0.071).frozen_rows_per_gate, 8u);
}

TEST(Stage2, HiddenSizeMismatchIsShapeError) {
  ModelConfig cfg;
  DualBranchModel<float> model(cfg);
  nn::LstmStack<float> small(cfg.temporal_features(), 64, 2);
  EXPECT_THROW(stage2_transfer(small, model, 1, 0.3), ShapeError);
  nn::LstmStack<float> shallow(cfg.temporal_features(), 128, 1);
  EXPECT_THROW(stage2_transfer(shallow, model, 1, 0.3), ShapeError);
}

TEST(Stage2, RandomMaskKeepsRowCountPerGate) {
  auto cfg = testing::miniature_config();
  cfg.lstm_hidden = 10;
  DualBranchModel<float> model(cfg);
  model.init(1);
  const auto mask = stage2_transfer(model.temporal.shared_lstm, model, 1, 0.3, 77);
  EXPECT_EQ(mask.frozen_rows_per_gate, 3u);  // 0.3 * 10 rounds to exactly 3
  const auto* m = mask.find("spatial.shared_lstm", "layer1.w_hh");
  ASSERT_NE(m, nullptr);
  for (std::size_t gate = 0; gate < 4; ++gate) {
    std::size_t rows = 0;
    for (std::size_t r = 0; r < 10; ++r) rows += (*m)[(gate * 10 + r) * 10];
    EXPECT_EQ(rows, 3u);
  }
}

// ------------------------------------------------------------------ stages

TEST(Stage3, FreezeIntegrityAndUnmaskedParametersMove) {
  // Maps stay at least 3x3 before every conv so no kernel tap sees only padding.
  auto cfg = testing::miniature_config();
  cfg.frame_height = cfg.frame_width = 32;
  cfg.pupil_size = 16;
  auto samples = testing::random_samples(cfg, 4, 4, 8);
  // Per-sample channel gains so pooled features differ between trials; with
  // i.i.d. pixels every trial pools to nearly the same vector.
  std::mt19937_64 rng(81);
  std::uniform_real_distribution<float> gain(0.1f, 2.0f);
  for (auto& smp : samples) {
    for (auto* a : {&smp.frames, &smp.pupil_images, &smp.attention_maps}) {
      const std::size_t planes = a->shape[1], plane = a->data.size() / (a->shape[0] * planes);
      std::vector<float> g(planes);
      for (auto& x : g) x = gain(rng);
      for (std::size_t k = 0; k < a->data.size(); ++k) a->data[k] *= g[(k / plane) % planes];
    }
  }
  DualBranchModel<float> model(cfg);
  model.init(2);
  TrainConfig tc;
  tc.stage1_epochs = 2;
  tc.stage3_epochs = 13;
  tc.batch_size = 4;  // batch statistics carry the between-trial differences
  TrainData data{pointers(samples), {}, {}};  // no validation: no snapshot restore
  TrainHistory history;
  TemporalHeads<float> heads(cfg);
  heads.init(tc.seed);
  stage1_pretrain(model, heads, data, tc, history);
  const auto mask = stage2_transfer(model, tc);
  std::map<std::string, nn::AlignedVector<float>> before;
  for (auto& g : model.groups())
    for (auto& p : g.params) before[g.name + "/" + p.name] = p.param->value;
  const auto r = stage3_joint_finetune(model, mask, data, tc, history);
  EXPECT_GE(r.optimizer_steps, 50u);

  std::size_t unmasked = 0, changed = 0;
  for (auto& g : model.groups()) {
    std::size_t group_changed = 0;
    for (auto& p : g.params) {
      const auto key = g.name + "/" + p.name;
      const auto* frozen = mask.find(g.name, p.name);
      const auto& old = before.at(key);
      for (std::size_t j = 0; j < old.size(); ++j) {
        const bool moved = p.param->value[j] != old[j];
        if (frozen && (*frozen)[j]) {
          ASSERT_FALSE(moved) << key << "[" << j << "]";
        } else {
          ++unmasked;
          changed += moved ? 1 : 0;
          group_changed += moved ? 1 : 0;
        }
      }
    }
    EXPECT_GT(group_changed, 0u) << g.name;
  }
  EXPECT_GE(static_cast<double>(changed), 0.99 * static_cast<double>(unmasked));
}

TEST(Stages, EarlyStopBookkeepingIsConsistent) {
  const auto cfg = testing::miniature_config();
  const auto samples = testing::random_samples(cfg, 4, 3, 4);
  DualBranchModel<float> model(cfg);
  model.init(4);
  TrainConfig tc;
  tc.stage1_epochs = 12;
  tc.stage3_epochs = 12;
  tc.patience = 2;
  tc.learning_rate = 0.02;  // large steps make validation loss turn early
  TrainData data{pointers(samples, 0, 9), pointers(samples, 9), {}};
  const auto out = train_three_stage(model, data, tc);
  for (const auto* s : {&out.stage1, &out.stage3}) {
    EXPECT_GE(s->best_epoch, 1u);
    EXPECT_LE(s->best_epoch, s->epochs_run);
    if (s->early_stopped) EXPECT_EQ(s->epochs_run - s->best_epoch, tc.patience);
  }
  ASSERT_EQ(out.history.epochs.size(), out.stage1.epochs_run + out.stage3.epochs_run);
  for (const auto& e : out.history.epochs) {
    EXPECT_TRUE(std::isfinite(e.train_loss));
    EXPECT_TRUE(std::isfinite(e.val_loss));
    EXPECT_EQ(e.val_accuracy.size(), kNumTasks);
  }
  // The kept parameters are those of the best validation epoch.
  const auto m = measure(model, data.val, {}, Phase::kJoint, nullptr, tc.batch_size);
  double best = INFINITY;
  for (std::size_t i = out.stage1.epochs_run; i < out.history.epochs.size(); ++i)
    best = std::min(best, out.history.epochs[i].val_loss);
  EXPECT_NEAR(m.loss, best, 1e-9);
}

TEST(Stages, FixedSeedGivesIdenticalLoss) {
  const auto cfg = testing::miniature_config();
  const auto samples = testing::random_samples(cfg, 3, 3, 6);
  TrainConfig tc;
  tc.stage1_epochs = 3;
  tc.stage3_epochs = 2;
  TrainData data{pointers(samples, 0, 7), pointers(samples, 7), {}};
  auto once = [&] {
    DualBranchModel<float> model(cfg);
    model.init(tc.seed);
    return train_three_stage(model, data, tc).history.to_csv();
  };
  EXPECT_EQ(once(), once());
}

TEST(Stages, StageOneLossDecreasesOnSixteenSamples) {
  const auto cfg = testing::miniature_config();
  const auto samples = testing::random_samples(cfg, 4, 4, 16);
  DualBranchModel<float> model(cfg);
  model.init(1);
  TemporalHeads<float> heads(cfg);
  heads.init(1);
  TrainConfig tc;
  tc.stage1_epochs = 10;
  tc.learning_rate = 3e-3;
  TrainHistory h;
  stage1_pretrain(model, heads, {pointers(samples), {}, {}}, tc, h);
  ASSERT_EQ(h.epochs.size(), 10u);
  EXPECT_LT(h.epochs.back().train_loss, h.epochs.front().train_loss);
}

TEST(Stages, StageOneLeavesSpatialBranchUntouched) {
  const auto cfg = testing::miniature_config();
  const auto samples = testing::random_samples(cfg, 2, 2, 3);
  DualBranchModel<float> model(cfg);
  model.init(1);
  std::vector<nn::AlignedVector<float>> before;
  for (auto& g : model.groups())
    if (g.name.rfind("spatial.", 0) == 0)
      for (auto& p : g.params) before.push_back(p.param->value);
  TemporalHeads<float> heads(cfg);
  heads.init(1);
  TrainConfig tc;
  tc.stage1_epochs = 2;
  TrainHistory h;
  stage1_pretrain(model, heads, {pointers(samples), {}, {}}, tc, h);
  std::size_t i = 0;
  for (auto& g : model.groups())
    if (g.name.rfind("spatial.", 0) == 0)
      for (auto& p : g.params) EXPECT_EQ(p.param->value, before[i++]) << g.name << "/" << p.name;
}

TEST(Stages, NonFiniteLossAborts) {
  const auto cfg = testing::miniature_config();
  const auto samples = testing::random_samples(cfg, 2, 2, 3);
  DualBranchModel<float> model(cfg);
  model.init(1);
  TemporalHeads<float> heads(cfg);
  heads.init(1);
  heads.heads[0].fc2.bias.value[0] = NAN;
  TrainConfig tc;
  tc.stage1_epochs = 1;
  TrainHistory h;
  EXPECT_THROW(stage1_pretrain(model, heads, {pointers(samples), {}, {}}, tc, h), TrainingError);
}

// ------------------------------------------------------------- evaluation

TEST(Evaluate, VideoOnlyZeroEqualsFullModeOnZeroedStreams) {
  const auto cfg = testing::miniature_config();
  auto samples = testing::random_samples(cfg, 2, 3, 12);
  DualBranchModel<float> model(cfg);
  model.init(8);
  const auto video_only = evaluate(model, pointers(samples), InferenceMode::kVideoOnlyZero);
  for (auto& s : samples) {
    std::fill(s.pupil_images.data.begin(), s.pupil_images.data.end(), 0.0f);
    std::fill(s.attention_maps.data.begin(), s.attention_maps.data.end(), 0.0f);
  }
  auto full = evaluate(model, pointers(samples), InferenceMode::kFullMultimodal);
  EXPECT_EQ(full.per_dimension, video_only.per_dimension);
  EXPECT_EQ(video_only.mode, "video-only-zero");
  EXPECT_THROW(evaluate(model, {}, InferenceMode::kFullMultimodal), ValidationError);
  EXPECT_THROW(evaluate(model, pointers(samples), InferenceMode::kVideoOnlyMeanFill), ConfigError);
}

// --------------------------------------------------------------- ablation

ExperimentConfig tiny_experiment() {
  ExperimentConfig c;
  c.model = testing::miniature_config();
  c.train.stage1_epochs = 1;
  c.train.stage3_epochs = 1;
  return c;
}

TEST(Ablation, NeitherVariantNeverOpensGazeFiles) {
  const auto dir = testing::temp_dir("abl_io");
  const auto cfg = tiny_experiment();
  testing::write_sample_set(dir, testing::random_samples(cfg.model, 5, 2, 3));
  std::vector<fs::path> opened;
  set_read_observer([&](const fs::path& p) { opened.push_back(p); });
  const auto r = run_ablation(cfg, AblationVariant::kNeither, dir);
  set_read_observer(nullptr);
  EXPECT_EQ(r.per_dimension.size(), kNumTasks);
  std::size_t frames = 0;
  for (const auto& p : opened) {
    const auto name = p.filename().string();
    EXPECT_EQ(name.find("pupil"), std::string::npos) << p;
    EXPECT_EQ(name.find("attention"), std::string::npos) << p;
    frames += name == "frames.arr" ? 1 : 0;
  }
  EXPECT_EQ(frames, 10u);
}

TEST(Ablation, NoPupilReadsAttentionOnly) {
  const auto dir = testing::temp_dir("abl_io2");
  const auto cfg = tiny_experiment();
  testing::write_sample_set(dir, testing::random_samples(cfg.model, 4, 2, 5));
  std::size_t pupil = 0, attention = 0;
  set_read_observer([&](const fs::path& p) {
    pupil += p.filename() == "pupil_images.arr";
    attention += p.filename() == "attention_maps.arr";
  });
  run_ablation(cfg, AblationVariant::kNoPupil, dir);
  set_read_observer(nullptr);
  EXPECT_EQ(pupil, 0u);
  EXPECT_EQ(attention, 8u);
}

TEST(Ablation, GridTableHasTheFourRowsAndTwoColumns) {
  std::vector<AblationRow> rows;
  for (auto v : kAblationVariants) rows.push_back({v, AccuracyReport::from_per_dimension(std::vector<double>(kNumTasks, 0.5))});
  const auto t = render_ablation_table(rows);
  std::istringstream in(t);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_NE(lines[0].find("Objective accuracy"), std::string::npos);
  EXPECT_NE(lines[0].find("Subjective accuracy"), std::string::npos);
  const char* labels[] = {"Full model", "w/o visual attention", "w/o pupil", "w/o visual attention & pupil"};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(lines[static_cast<std::size_t>(i) + 2].rfind(labels[i], 0), 0u) << lines[static_cast<std::size_t>(i) + 2];
    EXPECT_EQ(std::count(lines[static_cast<std::size_t>(i) + 2].begin(), lines[static_cast<std::size_t>(i) + 2].end(), '|'), 2);
  }
}

TEST(Ablation, MasksMatchVariants) {
  EXPECT_TRUE(mask_for(AblationVariant::kFull).pupil && mask_for(AblationVariant::kFull).attention);
  EXPECT_FALSE(mask_for(AblationVariant::kNoAttention).attention);
  EXPECT_TRUE(mask_for(AblationVariant::kNoAttention).pupil);
  EXPECT_FALSE(mask_for(AblationVariant::kNoPupil).pupil);
  EXPECT_FALSE(mask_for(AblationVariant::kNeither).pupil || mask_for(AblationVariant::kNeither).attention);
  for (auto v : kAblationVariants) EXPECT_EQ(parse_ablation_variant(to_string(v)), v);
  EXPECT_THROW(parse_ablation_variant("half"), ConfigError);
}

TEST(Experiment, RunDirectoryRecordsEverything) {
  const auto dir = testing::temp_dir("exp_dir");
  const auto cfg = tiny_experiment();
  testing::write_sample_set(dir / "data", testing::random_samples(cfg.model, 5, 2, 7));
  const auto data = load_dataset(dir / "data", cfg.split, cfg.split_seed);
  DualBranchModel<float> model(cfg.model);
  const auto result = run_experiment(model, data, cfg, {}, dir / "run");
  for (const char* f : {"config.txt", "seeds.txt", "split.txt", "history.csv", "report_full.txt",
                        "report_video-only-mean.txt", "checkpoints/stage1/checkpoint.txt",
                        "checkpoints/final/checkpoint.txt"}) {
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  }
  EXPECT_TRUE(result.test_video_only.has_value());
  const auto saved = AccuracyReport::read(KeyValueDocument::load(dir / "run" / "report_full.txt"));
  EXPECT_EQ(saved, result.test);
  const auto back = ExperimentConfig::read(KeyValueDocument::load(dir / "run" / "config.txt"));
  EXPECT_EQ(back.model, cfg.model);
  EXPECT_EQ(back.train.stage1_epochs, 1u);
  // The final checkpoint reproduces the reported test accuracy.
  auto ckpt = load_checkpoint(dir / "run" / "checkpoints" / "final");
  const auto again = evaluate(*ckpt.model, data.members(Split::kTest), InferenceMode::kFullMultimodal);
  EXPECT_EQ(again.per_dimension, result.test.per_dimension);
}

}  // namespace
}  // namespace gazenet
