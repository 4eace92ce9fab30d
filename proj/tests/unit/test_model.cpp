#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "gazenet/error.hpp"
#include "gazenet/model/model.hpp"

namespace gazenet {
namespace {

using testing::miniature_config;
using testing::random_input;
using testing::gradient_check;

TEST(GradientCheck, JointPhaseEveryGroupMatchesFiniteDifferences) {
  for (const auto& r : gradient_check(Phase::kJoint, 11)) {
    EXPECT_LT(r.rel_error, 1e-4) << r.group;
    EXPECT_GT(r.checked, 0u) << r.group;
  }
}

TEST(GradientCheck, TemporalPhaseWithTemporaryHeads) {
  for (const auto& r : gradient_check(Phase::kTemporalOnly, 12)) {
    EXPECT_LT(r.rel_error, 1e-4) << r.group;
  }
}

std::size_t conv_count(std::size_t cin, std::size_t cout) { return cout * cin * 9 + cout; }
std::size_t stack_count(std::size_t cin, const std::vector<std::size_t>& chans) {
  std::size_t n = 0;
  for (auto c : chans) {
    n += conv_count(cin, c) + 2 * c;
    cin = c;
  }
  return n;
}
std::size_t lstm_count(std::size_t d, std::size_t h) { return 4 * h * d + 4 * h * h + 4 * h; }
std::size_t linear_count(std::size_t in, std::size_t out) { return in * out + out; }

std::size_t expected_parameter_count(const ModelConfig& c) {
  const std::size_t K = c.n_tasks, H = c.lstm_hidden;
  std::size_t n = 0;
  n += 2 * stack_count(3, c.video_channels);
  n += stack_count(2, c.pupil_channels);
  n += stack_count(1, c.attention_channels);
  n += K * conv_count(c.video_channels.back(), c.video_task_channels) * 2;
  n += K * conv_count(c.pupil_channels.back(), c.pupil_task_channels);
  const std::size_t tin = c.video_task_channels + c.pupil_task_channels;
  const std::size_t sin = c.video_task_channels + c.attention_channels.back();
  n += lstm_count(tin, H) + (c.shared_lstm_layers - 1) * lstm_count(H, H);
  n += lstm_count(sin, H) + (c.shared_lstm_layers - 1) * lstm_count(H, H);
  n += K * lstm_count(H, H);
  const std::size_t b = sin / 4;
  n += linear_count(sin, b) + linear_count(b, c.video_task_channels) + linear_count(b, c.attention_channels.back());
  n += K * (linear_count(2 * H, c.head_hidden) + linear_count(c.head_hidden, 1));
  return n;
}

TEST(ModelParams, CountIsAFunctionOfTheConfig) {
  DualBranchModel<float> a(ModelConfig{});
  EXPECT_EQ(a.parameter_count(), expected_parameter_count(ModelConfig{}));
  EXPECT_EQ(a.parameter_count(), 3394631u);
  DualBranchModel<float> b(miniature_config());
  EXPECT_EQ(b.parameter_count(), expected_parameter_count(miniature_config()));
}

TEST(ModelParams, GroupsAreNamedAndReachable) {
  DualBranchModel<float> m(miniature_config());
  const auto groups = m.groups();
  EXPECT_EQ(groups.size(), 7u + 5u * 15u);
  for (const char* name : {"temporal.video_backbone", "temporal.video_taskconv.14", "temporal.pupil_encoder",
                           "temporal.pupil_taskconv.0", "temporal.shared_lstm", "spatial.video_backbone",
                           "spatial.video_taskconv.3", "spatial.attn_backbone", "spatial.mmtm",
                           "spatial.shared_lstm", "spatial.task_lstm.7", "head.9"}) {
    EXPECT_EQ(m.group(name).name, name);
  }
  EXPECT_THROW(m.group("spatial.nope"), ConfigError);
}

bool same_values(DualBranchModel<float>& a, DualBranchModel<float>& b) {
  auto ga = a.groups(), gb = b.groups();
  for (std::size_t i = 0; i < ga.size(); ++i) {
    for (std::size_t j = 0; j < ga[i].params.size(); ++j) {
      if (ga[i].params[j].param->value != gb[i].params[j].param->value) return false;
    }
  }
  return true;
}

TEST(InitModel, SeedDeterminism) {
  DualBranchModel<float> a(miniature_config()), b(miniature_config()), c(miniature_config());
  a.init(5);
  b.init(5);
  c.init(6);
  EXPECT_TRUE(same_values(a, b));
  EXPECT_FALSE(same_values(a, c));
}

TEST(InitModel, ForgetBiasOneOtherBiasesZero) {
  DualBranchModel<float> m(miniature_config());
  m.init(3);
  const std::size_t H = 4;
  for (auto* stack : {&m.temporal.shared_lstm, &m.spatial.shared_lstm}) {
    for (auto& l : stack->layers) {
      for (std::size_t i = 0; i < 4 * H; ++i) EXPECT_EQ(l.bias.value[i], (i >= H && i < 2 * H) ? 1.0f : 0.0f);
    }
  }
  for (auto& g : m.groups()) {
    for (auto& p : g.params) {
      if (p.name.ends_with("conv.bias") || p.name.ends_with("fc1.bias")) {
        for (float v : p.param->value) EXPECT_EQ(v, 0.0f) << g.name << "/" << p.name;
      }
    }
  }
}

TEST(InitModel, FanInScaledUniformBounds) {
  DualBranchModel<float> m(ModelConfig{});
  m.init(1);
  const auto& w = m.temporal.video_backbone.blocks[1].conv.weight.value;  // fan-in 16 * 9
  const float bound = std::sqrt(6.0f / 144.0f);
  float max_abs = 0;
  for (float v : w) max_abs = std::max(max_abs, std::abs(v));
  EXPECT_LE(max_abs, bound);
  EXPECT_GT(max_abs, 0.9f * bound);
}

TEST(InitModel, HiddenSizeEightGivesEightRowGateBlocks) {
  ModelConfig c = miniature_config();
  c.lstm_hidden = 8;
  DualBranchModel<float> m(c);
  for (auto* stack : {&m.temporal.shared_lstm, &m.spatial.shared_lstm}) {
    for (auto& l : stack->layers) {
      EXPECT_EQ(l.w_hh.shape, (std::vector<std::size_t>{32, 8}));
      EXPECT_EQ(l.w_ih.shape[0], 32u);
      EXPECT_EQ(l.bias.shape, (std::vector<std::size_t>{32}));
    }
  }
  for (auto& l : m.spatial.task_lstm) EXPECT_EQ(l.w_hh.shape, (std::vector<std::size_t>{32, 8}));
}

TEST(BranchForward, DefaultShapes) {
  ModelConfig c;
  DualBranchModel<float> m(c);
  m.init(2);
  std::mt19937_64 rng(2);
  const auto in = random_input<float>(c, 2, rng);
  const auto states = m.branch_states(in, 0);
  // H x (steps * batch) is the (batch, 80, 128) contract in column layout.
  EXPECT_EQ(states.temporal.rows(), 128);
  EXPECT_EQ(states.temporal.cols(), 160);
  EXPECT_EQ(states.spatial.rows(), 128);
  EXPECT_EQ(states.spatial.cols(), 160);
}

TEST(BranchForward, ZeroInputsGiveFiniteOutputs) {
  const auto c = miniature_config();
  DualBranchModel<float> m(c);
  m.init(4);
  std::mt19937_64 rng(4);
  auto in = random_input<float>(c, 1, rng);
  in.frames.zero();
  in.pupil.zero();
  in.attention.zero();
  const auto s = m.branch_states(in, 2);
  EXPECT_TRUE(s.temporal.allFinite());
  EXPECT_TRUE(s.spatial.allFinite());
  const auto p = m.predict(in);
  EXPECT_TRUE(p.allFinite());
}

TEST(BranchForward, ZeroAttentionMapsStillFinite) {
  const auto c = miniature_config();
  DualBranchModel<float> m(c);
  m.init(4);
  std::mt19937_64 rng(9);
  auto in = random_input<float>(c, 2, rng);
  in.attention.zero();
  EXPECT_TRUE(m.branch_states(in, 1).spatial.allFinite());
}

TEST(BranchForward, TimestepOrderMatters) {
  auto c = miniature_config();
  c.steps = 4;
  DualBranchModel<double> m(c);
  m.init(8);
  std::mt19937_64 rng(8);
  const auto in = random_input<double>(c, 1, rng);
  auto permuted = in;
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  for (const auto& pair : {std::pair{&in.frames, &permuted.frames}, std::pair{&in.pupil, &permuted.pupil},
                     std::pair{&in.attention, &permuted.attention}}) {
    const auto size = pair.first->image_size();
    for (std::size_t t = 0; t < perm.size(); ++t) {
      std::copy(pair.first->image(perm[t]), pair.first->image(perm[t]) + size, pair.second->image(t));
    }
  }
  const auto a = m.branch_states(in, 0), b = m.branch_states(permuted, 0);
  EXPECT_GT((a.temporal.rightCols(1) - b.temporal.rightCols(1)).norm(), 1e-9);
  EXPECT_GT((a.spatial.rightCols(1) - b.spatial.rightCols(1)).norm(), 1e-9);
}

TEST(BranchForward, StepCountMismatchIsAShapeError) {
  const auto c = miniature_config();
  DualBranchModel<float> m(c);
  auto c2 = c;
  c2.steps = 5;
  std::mt19937_64 rng(1);
  EXPECT_THROW(m.predict(random_input<float>(c2, 1, rng)), ShapeError);
}

TEST(Mmtm, ZeroExcitationIsIdentityGate) {
  nn::Mmtm<double> mm(3, 5, 2);
  nn::Rng rng(1);
  mm.init(rng);
  std::fill(mm.excite_a.weight.value.begin(), mm.excite_a.weight.value.end(), 0.0);
  std::fill(mm.excite_a.bias.value.begin(), mm.excite_a.bias.value.end(), 0.0);
  Tensor4<double> a(2, 3, 4, 6), b(2, 5, 3, 3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& v : a.v) v = u(rng);
  for (auto& v : b.v) v = u(rng);
  const auto [a2, b2] = nn::mmtm_recalibrate(mm, a, b);
  EXPECT_EQ(a2.v, a.v);
  EXPECT_NE(b2.v, b.v);
}

TEST(Mmtm, GatesLieStrictlyBetweenZeroAndTwo) {
  std::mt19937_64 seeds(3);
  for (int trial = 0; trial < 20; ++trial) {
    nn::Mmtm<double> mm(4, 6, 2);
    nn::Rng rng(seeds());
    mm.init(rng);
    std::normal_distribution<double> n(0, 1);
    Matrix<double> sa(4, 7), sb(6, 7);
    for (Eigen::Index i = 0; i < sa.size(); ++i) sa.data()[i] = n(rng);
    for (Eigen::Index i = 0; i < sb.size(); ++i) sb.data()[i] = n(rng);
    nn::Mmtm<double>::Cache cache;
    mm.forward(sa, sb, cache);
    EXPECT_GT(cache.gate_a.minCoeff(), 0.0);
    EXPECT_LT(cache.gate_a.maxCoeff(), 2.0);
    EXPECT_GT(cache.gate_b.minCoeff(), 0.0);
    EXPECT_LT(cache.gate_b.maxCoeff(), 2.0);
  }
}

TEST(Mmtm, GlobalAveragePoolIsLinear) {
  Tensor4<double> a(3, 2, 5, 4);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& v : a.v) v = u(rng);
  auto a2 = a;
  for (auto& v : a2.v) v *= 2;
  const auto s = nn::global_average_pool(a), s2 = nn::global_average_pool(a2);
  EXPECT_LT((s2 - 2 * s).cwiseAbs().maxCoeff(), 1e-14);
  // Oracle: direct mean of image 1, channel 1.
  double sum = 0;
  for (std::size_t k = 0; k < 20; ++k) sum += a.image(1)[20 + k];
  EXPECT_NEAR(s(1, 1), sum / 20, 1e-14);
}

TEST(Mmtm, ChannelMismatchThrows) {
  nn::Mmtm<float> mm(3, 5, 2);
  nn::Mmtm<float>::Cache cache;
  EXPECT_THROW(mm.forward(Matrix<float>::Zero(4, 2), Matrix<float>::Zero(5, 2), cache), ShapeError);
}

// With the excitation weights zeroed both gates are 1, so the residual
// combination doubles the pooled features entering the spatial LSTM.
TEST(SpatialBranch, IdentityGatesDoubleFeatures) {
  const auto c = miniature_config();
  DualBranchModel<double> m(c);
  m.init(21);
  for (auto* lin : {&m.spatial.mmtm.excite_a, &m.spatial.mmtm.excite_b}) {
    std::fill(lin->weight.value.begin(), lin->weight.value.end(), 0.0);
    std::fill(lin->bias.value.begin(), lin->bias.value.end(), 0.0);
  }
  std::mt19937_64 rng(21);
  const auto in = random_input<double>(c, 2, rng);
  const std::size_t task = 4;
  const auto states = m.branch_states(in, task);

  typename nn::ConvStack<double>::Cache vc, ac;
  const auto& v = m.spatial.video_backbone.forward(in.frames, false, vc);
  const auto& a = m.spatial.attn_backbone.forward(in.attention, false, ac);
  Tensor4<double> tv;
  m.spatial.video_taskconv[task].forward(v, tv);
  Matrix<double> x(3 + 4, 6);
  x.topRows(3) = 2.0 * nn::global_average_pool(tv);
  x.bottomRows(4) = 2.0 * nn::global_average_pool(a);
  typename nn::LstmStack<double>::Cache sc;
  const auto& hs = m.spatial.shared_lstm.forward(x, 3, 2, sc);
  typename nn::Lstm<double>::Cache tc;
  m.spatial.task_lstm[task].forward(hs, 3, 2, tc);
  EXPECT_LT((tc.hidden - states.spatial).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forward, ProbabilitiesInOpenUnitIntervalAndPure) {
  const auto c = miniature_config();
  DualBranchModel<float> m(c);
  m.init(31);
  std::mt19937_64 rng(31);
  const auto in = random_input<float>(c, 3, rng);
  const auto p = m.predict(in);
  EXPECT_EQ(p.rows(), 15);
  EXPECT_EQ(p.cols(), 3);
  EXPECT_GT(p.minCoeff(), 0.0f);
  EXPECT_LT(p.maxCoeff(), 1.0f);
  EXPECT_EQ(p, m.predict(in));
}

TEST(Forward, BatchEqualsPerSampleForwards) {
  const auto c = miniature_config();
  for (int precision = 0; precision < 2; ++precision) {
    std::mt19937_64 rng(41);
    std::vector<preprocess::AlignedSample> samples;
    for (int i = 0; i < 3; ++i) samples.push_back(testing::random_sample(c, rng));
    std::vector<const preprocess::AlignedSample*> all;
    for (auto& s : samples) all.push_back(&s);
    auto check = [&](auto model) {
      using T = typename decltype(model)::value_type;
      DualBranchModel<T> m(c);
      m.init(41);
      const auto batch = m.predict(assemble_input<T>(c, all));
      for (std::size_t i = 0; i < all.size(); ++i) {
        const auto single = m.predict(assemble_input<T>(c, {all[i]}));
        EXPECT_LT((batch.col(static_cast<Eigen::Index>(i)) - single.col(0)).cwiseAbs().maxCoeff(), T(1e-6));
      }
    };
    if (precision == 0) {
      check(std::vector<float>{});
    } else {
      check(std::vector<double>{});
    }
  }
}

TEST(Forward, TaskIsolation) {
  const auto c = miniature_config();
  DualBranchModel<double> m(c);
  m.init(51);
  std::mt19937_64 rng(51);
  const auto in = random_input<double>(c, 2, rng);
  const std::size_t t = 6;
  m.zero_grad();
  DualBranchModel<double>::RunOptions options;
  options.training = true;
  m.run(in, options, [&](std::size_t k, const Matrix<double>& z) {
    return k == t ? Matrix<double>::Ones(1, z.cols()) : Matrix<double>::Zero(1, z.cols());
  });
  for (auto& g : m.groups()) {
    const auto dot = g.name.rfind('.');
    const std::string suffix = g.name.substr(dot + 1);
    if (suffix.find_first_not_of("0123456789") != std::string::npos) continue;  // shared group
    double norm = 0;
    for (auto& p : g.params) {
      for (double v : p.param->grad) norm += std::abs(v);
    }
    if (std::stoul(suffix) == t) {
      EXPECT_GT(norm, 0.0) << g.name;
    } else {
      EXPECT_EQ(norm, 0.0) << g.name;
    }
  }
}

TEST(AssembleInput, LayoutAndSubstitution) {
  const auto c = miniature_config();
  std::mt19937_64 rng(61);
  auto s0 = testing::random_sample(c, rng, "A", "1");
  auto s1 = testing::random_sample(c, rng, "B", "2");
  const auto in = assemble_input<float>(c, {&s0, &s1});
  const std::size_t frame = 3 * 8 * 8;
  // Image index t * batch + b.
  EXPECT_EQ(in.frames.image(2 * 2 + 1)[5], s1.frames.data[2 * frame + 5]);
  EXPECT_EQ(in.pupil.image(1 * 2 + 0)[7], s0.pupil_images.data[1 * 128 + 7]);

  const auto zero = assemble_input<float>(c, {&s0, &s1}, InferenceMode::kVideoOnlyZero);
  EXPECT_EQ(zero.frames.v, in.frames.v);
  for (float v : zero.pupil.v) ASSERT_EQ(v, 0.0f);
  for (float v : zero.attention.v) ASSERT_EQ(v, 0.0f);

  EXPECT_THROW(assemble_input<float>(c, {&s0}, InferenceMode::kVideoOnlyMeanFill), ConfigError);

  const auto stats = compute_modality_stats({&s0, &s1});
  const auto mean = assemble_input<float>(c, {&s0}, InferenceMode::kVideoOnlyMeanFill, &stats);
  for (std::size_t t = 0; t < c.steps; ++t) {
    EXPECT_EQ(mean.pupil.image(t)[3], stats.mean_pupil_image.data[3]);
    EXPECT_EQ(mean.attention.image(t)[10], stats.mean_attention_map.data[10]);
  }

  ModalityMask no_pupil{false, true};
  const auto masked = assemble_input<float>(c, {&s0}, InferenceMode::kFullMultimodal, nullptr, no_pupil);
  for (float v : masked.pupil.v) ASSERT_EQ(v, 0.0f);
  EXPECT_EQ(masked.attention.image(0)[0], s0.attention_maps.data[0]);
}

TEST(AssembleInput, DisabledStreamsNeedNotBeLoaded) {
  const auto c = miniature_config();
  std::mt19937_64 rng(62);
  auto s = testing::random_sample(c, rng);
  s.pupil_images = {};
  s.attention_maps = {};
  EXPECT_NO_THROW(assemble_input<float>(c, {&s}, InferenceMode::kFullMultimodal, nullptr, {false, false}));
  EXPECT_NO_THROW(assemble_input<float>(c, {&s}, InferenceMode::kVideoOnlyZero));
  EXPECT_THROW(assemble_input<float>(c, {&s}), ShapeError);
}

TEST(ModalityStats, MeanOverSamplesAndSteps) {
  const auto c = miniature_config();
  std::mt19937_64 rng(63);
  auto s0 = testing::random_sample(c, rng), s1 = testing::random_sample(c, rng);
  const auto stats = compute_modality_stats({&s0, &s1});
  const std::size_t img = 2 * 8 * 8;
  for (std::size_t k : {0ul, 17ul, 127ul}) {
    double sum = 0;
    for (const auto* s : {&s0, &s1}) {
      for (std::size_t t = 0; t < 3; ++t) sum += s->pupil_images.data[t * img + k];
    }
    EXPECT_NEAR(stats.mean_pupil_image.data[k], sum / 6, 1e-6);
  }
  EXPECT_EQ(stats.mean_attention_map.shape, (std::vector<std::size_t>{1, 8, 8}));
}

}  // namespace
}  // namespace gazenet
