#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gazenet::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;  // column-major
template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<Matrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const Matrix<T>>;
template <typename T>
using RowMatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstRowMatrixMap = Eigen::Map<const RowMatrix<T>>;

// Storage aligned to the widest SIMD width so that vectorized reductions
// split work the same way on every run.
template <typename T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

// NCHW activation batch.
template <typename T>
struct Tensor4 {
  std::size_t n = 0, c = 0, h = 0, w = 0;
  AlignedVector<T> v;

  Tensor4() = default;
  Tensor4(std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_)
      : n(n_), c(c_), h(h_), w(w_), v(n_ * c_ * h_ * w_, T(0)) {}

  std::size_t plane() const { return h * w; }
  std::size_t image_size() const { return c * h * w; }
  T* image(std::size_t i) { return v.data() + i * image_size(); }
  const T* image(std::size_t i) const { return v.data() + i * image_size(); }
  bool same_shape(const Tensor4& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
  void zero() { std::fill(v.begin(), v.end(), T(0)); }
};

// Learnable tensor with its gradient accumulator.
template <typename T>
struct Param {
  std::string name;
  std::vector<std::size_t> shape;
  AlignedVector<T> value;
  AlignedVector<T> grad;

  Param() = default;
  Param(std::string n, std::vector<std::size_t> s);

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

template <typename T>
Param<T>::Param(std::string n, std::vector<std::size_t> s) : name(std::move(n)), shape(std::move(s)) {
  std::size_t count = 1;
  for (auto e : shape) count *= e;
  value.assign(count, T(0));
  grad.assign(count, T(0));
}

// Non-learnable state that still belongs in a checkpoint (BN running stats).
template <typename T>
struct Buffer {
  std::string name;
  AlignedVector<T> value;
};

}  // namespace gazenet::nn
