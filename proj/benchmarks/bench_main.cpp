#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "gazenet/model/model.hpp"
#include "gazenet/nn/layers.hpp"
#include "gazenet/preprocess/imaging.hpp"

using namespace gazenet;

namespace {

nn::Tensor4<float> random_tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w, std::mt19937_64& rng) {
  nn::Tensor4<float> t(n, c, h, w);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : t.v) v = u(rng);
  return t;
}

// Args: input channels, output channels, spatial size (square).
void BM_Conv3x3(benchmark::State& state) {
  const auto cin = static_cast<std::size_t>(state.range(0)), cout = static_cast<std::size_t>(state.range(1));
  const auto hw = static_cast<std::size_t>(state.range(2));
  std::mt19937_64 rng(1);
  nn::Conv2d<float> conv(cin, cout);
  conv.init(rng);
  const auto in = random_tensor(8, cin, hw, hw, rng);
  nn::Tensor4<float> out;
  for (auto _ : state) {
    conv.forward(in, out);
    benchmark::DoNotOptimize(out.v.data());
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_Conv3x3)->Args({3, 16, 90})->Args({16, 32, 45})->Args({32, 64, 22});

void BM_Conv3x3Backward(benchmark::State& state) {
  std::mt19937_64 rng(2);
  nn::Conv2d<float> conv(16, 32);
  conv.init(rng);
  const auto in = random_tensor(8, 16, 45, 45, rng);
  nn::Tensor4<float> out, din;
  conv.forward(in, out);
  const auto dout = random_tensor(8, 32, 45, 45, rng);
  for (auto _ : state) {
    conv.backward(in, dout, &din);
    benchmark::DoNotOptimize(din.v.data());
  }
}
BENCHMARK(BM_Conv3x3Backward);

// Args: hidden size, steps.
void BM_LstmForward(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0)), steps = static_cast<std::size_t>(state.range(1));
  const std::size_t batch = 2, input = 48;
  std::mt19937_64 rng(3);
  nn::Lstm<float> lstm(input, hidden);
  lstm.init(rng);
  Matrix<float> x = Matrix<float>::Random(static_cast<Eigen::Index>(input), static_cast<Eigen::Index>(steps * batch));
  nn::Lstm<float>::Cache cache;
  for (auto _ : state) {
    lstm.forward(x, steps, batch, cache);
    benchmark::DoNotOptimize(cache.hidden.data());
  }
}
BENCHMARK(BM_LstmForward)->Args({32, 80})->Args({128, 80});

void BM_Gaf(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> w(static_cast<std::size_t>(state.range(0)));
  for (auto& v : w) v = n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(preprocess::gaf(w).v.data());
}
BENCHMARK(BM_Gaf)->Arg(32)->Arg(60);

void BM_Mtf(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> w(static_cast<std::size_t>(state.range(0)));
  for (auto& v : w) v = n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(preprocess::mtf(w, 8).v.data());
}
BENCHMARK(BM_Mtf)->Arg(32)->Arg(60);

// Evaluation-mode forward of the default-width model on one trial with
// shortened sequences. Arg: steps.
void BM_ModelPredict(benchmark::State& state) {
  ModelConfig cfg;
  cfg.steps = static_cast<std::size_t>(state.range(0));
  cfg.frame_height = 45;
  cfg.frame_width = 80;
  DualBranchModel<float> model(cfg);
  model.init(6);
  std::mt19937_64 rng(6);
  ModelInput<float> in;
  in.batch = 1;
  in.steps = cfg.steps;
  in.frames = random_tensor(cfg.steps, 3, cfg.frame_height, cfg.frame_width, rng);
  in.pupil = random_tensor(cfg.steps, 2, cfg.pupil_size, cfg.pupil_size, rng);
  in.attention = random_tensor(cfg.steps, 1, cfg.frame_height, cfg.frame_width, rng);
  for (auto _ : state) {
    auto p = model.predict(in);
    benchmark::DoNotOptimize(p.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.steps));
}
BENCHMARK(BM_ModelPredict)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
