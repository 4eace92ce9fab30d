#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "gazenet/nn/tensor.hpp"

namespace gazenet::nn {

using Rng = std::mt19937_64;

template <typename T>
using ParamVisitor = std::function<void(Param<T>&)>;
template <typename T>
using BufferVisitor = std::function<void(const std::string&, AlignedVector<T>&)>;

// Uniform(-bound, bound) fill.
template <typename T>
void fill_uniform(AlignedVector<T>& v, T bound, Rng& rng);

// 3x3 convolution, stride 1, zero padding 1.
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::size_t cin, std::size_t cout);

  void init(Rng& rng, T gain_bound_scale = T(1));
  void forward(const Tensor4<T>& in, Tensor4<T>& out) const;
  // Accumulates weight/bias gradients; `din` (may be null) receives dL/din.
  void backward(const Tensor4<T>& in, const Tensor4<T>& dout, Tensor4<T>* din);
  void visit(const ParamVisitor<T>& f) { f(weight); f(bias); }

  std::size_t in_channels() const { return cin_; }
  std::size_t out_channels() const { return cout_; }

  Param<T> weight;  // cout x (cin * 9)
  Param<T> bias;

 private:
  std::size_t cin_ = 0, cout_ = 0;
};

template <typename T>
class BatchNorm2d {
 public:
  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

  BatchNorm2d() = default;
  explicit BatchNorm2d(std::size_t channels);

  struct Cache {
    std::vector<T> inv_std;
    std::vector<T> batch_mean, batch_var;
    bool training = false;
  };

  // In-place: x becomes x_hat (normalized, before affine); returns the cache.
  Cache normalize(Tensor4<T>& x, bool training) const;
  T scale(std::size_t c) const { return gamma.value[c]; }
  T shift(std::size_t c) const { return beta.value[c]; }
  // dy -> dx in place, given x_hat. Accumulates gamma/beta gradients.
  void backward(const Tensor4<T>& x_hat, const Cache& cache, Tensor4<T>& dy);
  void update_running(const Cache& cache, std::size_t count);

  void visit(const ParamVisitor<T>& f) { f(gamma); f(beta); }
  void visit_buffers(const BufferVisitor<T>& f) {
    f("running_mean", running_mean);
    f("running_var", running_var);
  }

  Param<T> gamma, beta;
  AlignedVector<T> running_mean, running_var;
};

// conv -> batch norm -> ReLU -> 2x2 max pool.
template <typename T>
class ConvBlock {
 public:
  ConvBlock() = default;
  ConvBlock(std::size_t cin, std::size_t cout) : conv(cin, cout), bn(cout) {}

  struct Cache {
    const Tensor4<T>* input = nullptr;
    Tensor4<T> x_hat;
    std::vector<std::uint8_t> argmax;  // position inside the 2x2 window
    typename BatchNorm2d<T>::Cache bn;
    Tensor4<T> output;
  };

  // `in` must outlive the cache.
  void forward(const Tensor4<T>& in, bool training, Cache& cache) const;
  void backward(Cache& cache, const Tensor4<T>& dout, Tensor4<T>* din);
  void update_running(const Cache& cache);

  void init(Rng& rng) { conv.init(rng); }
  void visit(const ParamVisitor<T>& f) { conv.visit(f); bn.visit(f); }

  Conv2d<T> conv;
  BatchNorm2d<T> bn;
};

// Stack of ConvBlocks.
template <typename T>
class ConvStack {
 public:
  ConvStack() = default;
  ConvStack(std::size_t cin, const std::vector<std::size_t>& channels);

  using Cache = std::vector<typename ConvBlock<T>::Cache>;
  const Tensor4<T>& forward(const Tensor4<T>& in, bool training, Cache& cache) const;
  void backward(Cache& cache, const Tensor4<T>& dout, bool need_input_grad, Tensor4<T>* din);
  void update_running(const Cache& cache);

  void init(Rng& rng);
  void visit(const ParamVisitor<T>& f);
  void visit_buffers(const BufferVisitor<T>& f);

  std::vector<ConvBlock<T>> blocks;
};

// Task-specific convolution: conv -> ReLU (no pooling).
template <typename T>
class TaskConv {
 public:
  TaskConv() = default;
  TaskConv(std::size_t cin, std::size_t cout) : conv(cin, cout) {}

  void forward(const Tensor4<T>& in, Tensor4<T>& out) const;
  // `out` is the forward output (for the ReLU mask); `dout` is modified.
  void backward(const Tensor4<T>& in, const Tensor4<T>& out, Tensor4<T>& dout, Tensor4<T>* din);
  void init(Rng& rng) { conv.init(rng); }
  void visit(const ParamVisitor<T>& f) { conv.visit(f); }

  Conv2d<T> conv;
};

// Global average pool: N x C x H x W -> C x N matrix (column per image).
template <typename T>
Matrix<T> global_average_pool(const Tensor4<T>& x);
// Adds the broadcast of d(pooled) (C x N) into dx.
template <typename T>
void global_average_pool_backward(const Matrix<T>& dpooled, Tensor4<T>& dx);

template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out);

  // X: in x N -> out x N.
  Matrix<T> forward(const Matrix<T>& x) const;
  // Accumulates gradients, returns dX.
  Matrix<T> backward(const Matrix<T>& x, const Matrix<T>& dy);
  void init(Rng& rng, bool relu_follows);
  void visit(const ParamVisitor<T>& f) { f(weight); f(bias); }

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

  Param<T> weight;  // out x in, row-major
  Param<T> bias;

 private:
  std::size_t in_ = 0, out_ = 0;
};

// Single LSTM layer. Gate blocks in order input, forget, cell, output; one
// bias vector. Sequences are laid out as columns t * batch + b.
template <typename T>
class Lstm {
 public:
  Lstm() = default;
  Lstm(std::size_t input, std::size_t hidden);

  struct Cache {
    std::size_t steps = 0, batch = 0;
    const Matrix<T>* input = nullptr;
    Matrix<T> gates;   // 4H x TB, activated
    Matrix<T> cell;    // H x TB
    Matrix<T> hidden;  // H x TB
  };

  void forward(const Matrix<T>& x, std::size_t steps, std::size_t batch, Cache& cache) const;
  // dh: H x TB gradient on every output; returns dX (D x TB).
  Matrix<T> backward(const Cache& cache, const Matrix<T>& dh);

  void init_input_weights(Rng& rng);
  void init(Rng& rng);
  void visit(const ParamVisitor<T>& f) { f(w_ih); f(w_hh); f(bias); }

  std::size_t input_size() const { return input_; }
  std::size_t hidden_size() const { return hidden_; }

  Param<T> w_ih;  // 4H x D, row-major
  Param<T> w_hh;  // 4H x H, row-major
  Param<T> bias;  // 4H

 private:
  std::size_t input_ = 0, hidden_ = 0;
};

template <typename T>
class LstmStack {
 public:
  LstmStack() = default;
  LstmStack(std::size_t input, std::size_t hidden, std::size_t layers);

  using Cache = std::vector<typename Lstm<T>::Cache>;
  // Returns the top layer's hidden sequence (H x TB). `x` must outlive the cache.
  const Matrix<T>& forward(const Matrix<T>& x, std::size_t steps, std::size_t batch,
                           Cache& cache) const;
  Matrix<T> backward(const Cache& cache, const Matrix<T>& dh_top);

  void init(Rng& rng);
  void visit(const ParamVisitor<T>& f);

  std::vector<Lstm<T>> layers;
};

// Multimodal transfer module: squeeze both streams, joint bottleneck, and
// per-stream channel gates 2 * sigmoid(.).
template <typename T>
class Mmtm {
 public:
  Mmtm() = default;
  Mmtm(std::size_t ca, std::size_t cb, std::size_t bottleneck);

  struct Cache {
    Matrix<T> joint;  // (CA + CB) x N
    Matrix<T> z;      // bottleneck x N, post-ReLU
    Matrix<T> gate_a, gate_b;
  };

  // Inputs are the squeezed (pooled) streams, C x N.
  void forward(const Matrix<T>& sa, const Matrix<T>& sb, Cache& cache) const;
  // Given dL/dgate_a and dL/dgate_b, accumulates parameter gradients and
  // returns dL/dsa and dL/dsb contributions through the gates.
  std::pair<Matrix<T>, Matrix<T>> backward(const Cache& cache, const Matrix<T>& dgate_a,
                                           const Matrix<T>& dgate_b);

  void init(Rng& rng);
  void visit(const ParamVisitor<T>& f) {
    squeeze.visit(f);
    excite_a.visit(f);
    excite_b.visit(f);
  }

  std::size_t channels_a() const { return ca_; }
  std::size_t channels_b() const { return cb_; }

  Linear<T> squeeze;
  Linear<T> excite_a;
  Linear<T> excite_b;

 private:
  std::size_t ca_ = 0, cb_ = 0;
};

// Full-map recalibration A * E_A, B * E_B (channel broadcast).
template <typename T>
std::pair<Tensor4<T>, Tensor4<T>> mmtm_recalibrate(const Mmtm<T>& module, const Tensor4<T>& a,
                                                   const Tensor4<T>& b);

// Two-layer head: FC -> ReLU -> FC(1), logit output.
template <typename T>
class Head {
 public:
  Head() = default;
  Head(std::size_t in, std::size_t hidden) : fc1(in, hidden), fc2(hidden, 1) {}

  struct Cache {
    Matrix<T> input, hidden;
  };
  Matrix<T> forward(const Matrix<T>& x, Cache& cache) const;  // 1 x N logits
  Matrix<T> backward(const Cache& cache, const Matrix<T>& dlogit);
  void init(Rng& rng) {
    fc1.init(rng, true);
    fc2.init(rng, false);
  }
  void visit(const ParamVisitor<T>& f) { fc1.visit(f); fc2.visit(f); }

  Linear<T> fc1, fc2;
};

template <typename T>
inline T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

}  // namespace gazenet::nn
