#include "gazenet/nn/layers.hpp"

#include <cmath>

#include "gazenet/error.hpp"

namespace gazenet::nn {
namespace {

constexpr std::size_t kTargetColumns = 2048;

std::size_t group_size(std::size_t n, std::size_t plane) {
  return std::max<std::size_t>(1, std::min(n, kTargetColumns / std::max<std::size_t>(plane, 1)));
}

// Unfolds one C x H x W image into rows (c, ky, kx) of the column matrix,
// writing `h * w` columns starting at `offset` of each row.
template <typename T>
void im2col(const T* img, std::size_t cin, std::size_t h, std::size_t w, T* col, std::size_t ld,
            std::size_t offset) {
  for (std::size_t ci = 0; ci < cin; ++ci) {
    const T* src = img + ci * h * w;
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        T* dst = col + ((ci * 3 + ky) * 3 + kx) * ld + offset;
        const std::size_t x0 = kx == 0 ? 1 : 0;
        const std::size_t x1 = kx == 2 ? w - 1 : w;
        for (std::size_t y = 0; y < h; ++y) {
          T* drow = dst + y * w;
          const long sy = static_cast<long>(y + ky) - 1;
          if (sy < 0 || sy >= static_cast<long>(h) || x1 <= x0) {
            std::fill(drow, drow + w, T(0));
            continue;
          }
          const T* srow = src + static_cast<std::size_t>(sy) * w;
          std::fill(drow, drow + x0, T(0));
          std::copy(srow + x0 + kx - 1, srow + x1 + kx - 1, drow + x0);
          std::fill(drow + x1, drow + w, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, std::size_t ld, std::size_t offset, std::size_t cin, std::size_t h,
            std::size_t w, T* img) {
  for (std::size_t ci = 0; ci < cin; ++ci) {
    T* dst = img + ci * h * w;
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const T* src = col + ((ci * 3 + ky) * 3 + kx) * ld + offset;
        const std::size_t x0 = kx == 0 ? 1 : 0;
        const std::size_t x1 = kx == 2 ? w - 1 : w;
        for (std::size_t y = 0; y < h; ++y) {
          const long sy = static_cast<long>(y + ky) - 1;
          if (sy < 0 || sy >= static_cast<long>(h)) continue;
          const T* srow = src + y * w;
          T* drow = dst + static_cast<std::size_t>(sy) * w + kx - 1;
          for (std::size_t x = x0; x < x1; ++x) drow[x] += srow[x];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
void fill_uniform(AlignedVector<T>& v, T bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-static_cast<double>(bound), static_cast<double>(bound));
  for (auto& x : v) x = static_cast<T>(dist(rng));
}

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(std::size_t cin, std::size_t cout)
    : weight("weight", {cout, cin * 9}), bias("bias", {cout}), cin_(cin), cout_(cout) {}

template <typename T>
void Conv2d<T>::init(Rng& rng, T scale) {
  fill_uniform(weight.value, scale * static_cast<T>(std::sqrt(6.0 / static_cast<double>(cin_ * 9))), rng);
  std::fill(bias.value.begin(), bias.value.end(), T(0));
}

template <typename T>
void Conv2d<T>::forward(const Tensor4<T>& in, Tensor4<T>& out) const {
  if (in.c != cin_) {
    throw ShapeError("conv expects " + std::to_string(cin_) + " input channels, got " +
                     std::to_string(in.c));
  }
  if (!(out.n == in.n && out.c == cout_ && out.h == in.h && out.w == in.w)) {
    out = Tensor4<T>(in.n, cout_, in.h, in.w);
  }
  const std::size_t hw = in.plane();
  const std::size_t k = cin_ * 9;
  const std::size_t g = group_size(in.n, hw);
  RowMatrix<T> col(k, g * hw);
  RowMatrix<T> res(cout_, g * hw);
  ConstRowMatrixMap<T> wmat(weight.value.data(), cout_, k);
  for (std::size_t first = 0; first < in.n; first += g) {
    const std::size_t count = std::min(g, in.n - first);
    const std::size_t cols = count * hw;
    for (std::size_t i = 0; i < count; ++i) im2col(in.image(first + i), cin_, in.h, in.w, col.data(), g * hw, i * hw);
    res.leftCols(cols).noalias() = wmat * col.leftCols(cols);
    for (std::size_t i = 0; i < count; ++i) {
      T* dst = out.image(first + i);
      for (std::size_t co = 0; co < cout_; ++co) {
        const T b = bias.value[co];
        const T* src = res.data() + co * g * hw + i * hw;
        T* d = dst + co * hw;
        for (std::size_t p = 0; p < hw; ++p) d[p] = src[p] + b;
      }
    }
  }
}

template <typename T>
void Conv2d<T>::backward(const Tensor4<T>& in, const Tensor4<T>& dout, Tensor4<T>* din) {
  const std::size_t hw = in.plane();
  const std::size_t k = cin_ * 9;
  const std::size_t g = group_size(in.n, hw);
  if (din != nullptr && !din->same_shape(in)) *din = Tensor4<T>(in.n, in.c, in.h, in.w);
  if (din != nullptr) din->zero();
  RowMatrix<T> col(k, g * hw);
  RowMatrix<T> dres(cout_, g * hw);
  RowMatrix<T> dcol;
  if (din != nullptr) dcol.resize(k, g * hw);
  ConstRowMatrixMap<T> wmat(weight.value.data(), cout_, k);
  RowMatrixMap<T> dw(weight.grad.data(), cout_, k);
  for (std::size_t first = 0; first < in.n; first += g) {
    const std::size_t count = std::min(g, in.n - first);
    const std::size_t cols = count * hw;
    for (std::size_t i = 0; i < count; ++i) {
      im2col(in.image(first + i), cin_, in.h, in.w, col.data(), g * hw, i * hw);
      const T* src = dout.image(first + i);
      for (std::size_t co = 0; co < cout_; ++co) {
        const T* s = src + co * hw;
        T* d = dres.data() + co * g * hw + i * hw;
        T acc = 0;
        for (std::size_t p = 0; p < hw; ++p) {
          d[p] = s[p];
          acc += s[p];
        }
        bias.grad[co] += acc;
      }
    }
    dw.noalias() += dres.leftCols(cols) * col.leftCols(cols).transpose();
    if (din != nullptr) {
      dcol.leftCols(cols).noalias() = wmat.transpose() * dres.leftCols(cols);
      for (std::size_t i = 0; i < count; ++i) {
        col2im(dcol.data(), g * hw, i * hw, cin_, in.h, in.w, din->image(first + i));
      }
    }
  }
}

// ----------------------------------------------------------- BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(std::size_t channels)
    : gamma("gamma", {channels}),
      beta("beta", {channels}),
      running_mean(channels, T(0)),
      running_var(channels, T(1)) {
  std::fill(gamma.value.begin(), gamma.value.end(), T(1));
}

template <typename T>
typename BatchNorm2d<T>::Cache BatchNorm2d<T>::normalize(Tensor4<T>& x, bool training) const {
  const std::size_t channels = x.c, hw = x.plane();
  Cache cache;
  cache.training = training;
  cache.inv_std.resize(channels);
  using Vec = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>;
  using ConstVec = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>;
  const auto plane = static_cast<Eigen::Index>(hw);
  if (training) {
    cache.batch_mean.resize(channels);
    cache.batch_var.resize(channels);
    const double count = static_cast<double>(x.n * hw);
    for (std::size_t c = 0; c < channels; ++c) {
      double sum = 0;
      for (std::size_t i = 0; i < x.n; ++i) sum += ConstVec(x.image(i) + c * hw, plane).sum();
      const double mean = sum / count;
      double ss = 0;
      for (std::size_t i = 0; i < x.n; ++i) {
        ss += (ConstVec(x.image(i) + c * hw, plane) - static_cast<T>(mean)).square().sum();
      }
      const double var = ss / count;
      cache.batch_mean[c] = static_cast<T>(mean);
      cache.batch_var[c] = static_cast<T>(var);
      cache.inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + kEps));
    }
  } else {
    for (std::size_t c = 0; c < channels; ++c) {
      cache.inv_std[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var[c]) + kEps));
    }
  }
  for (std::size_t i = 0; i < x.n; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      Vec p(x.image(i) + c * hw, plane);
      const T mean = training ? cache.batch_mean[c] : running_mean[c];
      p = (p - mean) * cache.inv_std[c];
    }
  }
  return cache;
}

template <typename T>
void BatchNorm2d<T>::backward(const Tensor4<T>& x_hat, const Cache& cache, Tensor4<T>& dy) {
  const std::size_t channels = x_hat.c, hw = x_hat.plane();
  const T count = static_cast<T>(x_hat.n * hw);
  using Vec = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>;
  using ConstVec = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>;
  const auto plane = static_cast<Eigen::Index>(hw);
  for (std::size_t c = 0; c < channels; ++c) {
    T sum_dy = 0, sum_dy_xhat = 0;
    for (std::size_t i = 0; i < x_hat.n; ++i) {
      ConstVec d(dy.image(i) + c * hw, plane);
      sum_dy += d.sum();
      sum_dy_xhat += (d * ConstVec(x_hat.image(i) + c * hw, plane)).sum();
    }
    gamma.grad[c] += sum_dy_xhat;
    beta.grad[c] += sum_dy;
    const T g = gamma.value[c] * cache.inv_std[c];
    const T mean_dy = sum_dy / count;
    const T mean_dy_xhat = sum_dy_xhat / count;
    for (std::size_t i = 0; i < x_hat.n; ++i) {
      Vec d(dy.image(i) + c * hw, plane);
      if (cache.training) {
        d = g * (d - mean_dy - ConstVec(x_hat.image(i) + c * hw, plane) * mean_dy_xhat);
      } else {
        d *= g;
      }
    }
  }
}

template <typename T>
void BatchNorm2d<T>::update_running(const Cache& cache, std::size_t count) {
  if (!cache.training) return;
  const T m = static_cast<T>(kMomentum);
  const T unbias = count > 1 ? static_cast<T>(count) / static_cast<T>(count - 1) : T(1);
  for (std::size_t c = 0; c < running_mean.size(); ++c) {
    running_mean[c] = (T(1) - m) * running_mean[c] + m * cache.batch_mean[c];
    running_var[c] = (T(1) - m) * running_var[c] + m * cache.batch_var[c] * unbias;
  }
}

// ------------------------------------------------------------- ConvBlock

template <typename T>
void ConvBlock<T>::forward(const Tensor4<T>& in, bool training, Cache& cache) const {
  cache.input = &in;
  conv.forward(in, cache.x_hat);
  cache.bn = bn.normalize(cache.x_hat, training);
  const auto& x = cache.x_hat;
  const std::size_t oh = x.h / 2, ow = x.w / 2;
  cache.output = Tensor4<T>(x.n, x.c, oh, ow);
  cache.argmax.assign(x.n * x.c * oh * ow, 0);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < x.n; ++i) {
    for (std::size_t c = 0; c < x.c; ++c) {
      const T g = bn.scale(c), b = bn.shift(c);
      const T* src = x.image(i) + c * x.plane();
      T* dst = cache.output.image(i) + c * oh * ow;
      for (std::size_t y = 0; y < oh; ++y) {
        const T* r0 = src + (2 * y) * x.w;
        const T* r1 = r0 + x.w;
        for (std::size_t xx = 0; xx < ow; ++xx, ++idx) {
          const T v[4] = {r0[2 * xx], r0[2 * xx + 1], r1[2 * xx], r1[2 * xx + 1]};
          std::uint8_t best = 0;
          T bv = g * v[0] + b;
          for (std::uint8_t q = 1; q < 4; ++q) {
            const T cand = g * v[q] + b;
            if (cand > bv) {
              bv = cand;
              best = q;
            }
          }
          dst[y * ow + xx] = bv > T(0) ? bv : T(0);
          cache.argmax[idx] = best;
        }
      }
    }
  }
}

template <typename T>
void ConvBlock<T>::backward(Cache& cache, const Tensor4<T>& dout, Tensor4<T>* din) {
  const auto& x = cache.x_hat;
  const std::size_t oh = x.h / 2, ow = x.w / 2;
  Tensor4<T> dy(x.n, x.c, x.h, x.w);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < x.n; ++i) {
    for (std::size_t c = 0; c < x.c; ++c) {
      const T* out = cache.output.image(i) + c * oh * ow;
      const T* d = dout.image(i) + c * oh * ow;
      T* dst = dy.image(i) + c * x.plane();
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t xx = 0; xx < ow; ++xx, ++idx) {
          if (out[y * ow + xx] <= T(0)) continue;  // ReLU clipped
          const std::uint8_t q = cache.argmax[idx];
          dst[(2 * y + q / 2) * x.w + 2 * xx + q % 2] = d[y * ow + xx];
        }
      }
    }
  }
  bn.backward(cache.x_hat, cache.bn, dy);
  conv.backward(*cache.input, dy, din);
}

template <typename T>
void ConvBlock<T>::update_running(const Cache& cache) {
  bn.update_running(cache.bn, cache.x_hat.n * cache.x_hat.plane());
}

// ------------------------------------------------------------- ConvStack

template <typename T>
ConvStack<T>::ConvStack(std::size_t cin, const std::vector<std::size_t>& channels) {
  for (std::size_t c : channels) {
    blocks.emplace_back(cin, c);
    cin = c;
  }
}

template <typename T>
const Tensor4<T>& ConvStack<T>::forward(const Tensor4<T>& in, bool training, Cache& cache) const {
  cache.resize(blocks.size());
  const Tensor4<T>* x = &in;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].forward(*x, training, cache[i]);
    x = &cache[i].output;
  }
  return *x;
}

template <typename T>
void ConvStack<T>::backward(Cache& cache, const Tensor4<T>& dout, bool need_input_grad,
                            Tensor4<T>* din) {
  Tensor4<T> grad = dout;
  for (std::size_t i = blocks.size(); i-- > 0;) {
    Tensor4<T> next;
    const bool want = i > 0 || need_input_grad;
    blocks[i].backward(cache[i], grad, want ? &next : nullptr);
    // The block's activations are no longer needed.
    cache[i].x_hat = Tensor4<T>();
    if (want) grad = std::move(next);
  }
  if (need_input_grad && din != nullptr) *din = std::move(grad);
}

template <typename T>
void ConvStack<T>::update_running(const Cache& cache) {
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].update_running(cache[i]);
}

template <typename T>
void ConvStack<T>::init(Rng& rng) {
  for (auto& b : blocks) b.init(rng);
}

template <typename T>
void ConvStack<T>::visit(const ParamVisitor<T>& f) {
  for (auto& b : blocks) b.visit(f);
}

template <typename T>
void ConvStack<T>::visit_buffers(const BufferVisitor<T>& f) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].bn.visit_buffers([&](const std::string& name, AlignedVector<T>& v) {
      f("block" + std::to_string(i) + "." + name, v);
    });
  }
}

// -------------------------------------------------------------- TaskConv

template <typename T>
void TaskConv<T>::forward(const Tensor4<T>& in, Tensor4<T>& out) const {
  conv.forward(in, out);
  for (auto& v : out.v) v = v > T(0) ? v : T(0);
}

template <typename T>
void TaskConv<T>::backward(const Tensor4<T>& in, const Tensor4<T>& out, Tensor4<T>& dout,
                           Tensor4<T>* din) {
  for (std::size_t k = 0; k < dout.v.size(); ++k) {
    if (out.v[k] <= T(0)) dout.v[k] = T(0);
  }
  conv.backward(in, dout, din);
}

// ------------------------------------------------------------------- GAP

template <typename T>
Matrix<T> global_average_pool(const Tensor4<T>& x) {
  Matrix<T> out(x.c, x.n);
  const std::size_t hw = x.plane();
  for (std::size_t i = 0; i < x.n; ++i) {
    for (std::size_t c = 0; c < x.c; ++c) {
      const T* p = x.image(i) + c * hw;
      T acc = 0;
      for (std::size_t k = 0; k < hw; ++k) acc += p[k];
      out(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = acc / static_cast<T>(hw);
    }
  }
  return out;
}

template <typename T>
void global_average_pool_backward(const Matrix<T>& dpooled, Tensor4<T>& dx) {
  const std::size_t hw = dx.plane();
  for (std::size_t i = 0; i < dx.n; ++i) {
    for (std::size_t c = 0; c < dx.c; ++c) {
      const T g = dpooled(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) / static_cast<T>(hw);
      T* p = dx.image(i) + c * hw;
      for (std::size_t k = 0; k < hw; ++k) p[k] += g;
    }
  }
}

// ---------------------------------------------------------------- Linear

template <typename T>
Linear<T>::Linear(std::size_t in, std::size_t out)
    : weight("weight", {out, in}), bias("bias", {out}), in_(in), out_(out) {}

template <typename T>
void Linear<T>::init(Rng& rng, bool relu_follows) {
  const double fan = static_cast<double>(in_);
  fill_uniform(weight.value, static_cast<T>(relu_follows ? std::sqrt(6.0 / fan) : 1.0 / std::sqrt(fan)), rng);
  std::fill(bias.value.begin(), bias.value.end(), T(0));
}

template <typename T>
Matrix<T> Linear<T>::forward(const Matrix<T>& x) const {
  if (static_cast<std::size_t>(x.rows()) != in_) {
    throw ShapeError("linear expects " + std::to_string(in_) + " features, got " +
                     std::to_string(x.rows()));
  }
  ConstRowMatrixMap<T> w(weight.value.data(), out_, in_);
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> b(bias.value.data(), out_);
  Matrix<T> y = w * x;
  y.colwise() += b;
  return y;
}

template <typename T>
Matrix<T> Linear<T>::backward(const Matrix<T>& x, const Matrix<T>& dy) {
  RowMatrixMap<T> dw(weight.grad.data(), out_, in_);
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(bias.grad.data(), out_);
  dw.noalias() += dy * x.transpose();
  db += dy.rowwise().sum();
  ConstRowMatrixMap<T> w(weight.value.data(), out_, in_);
  return w.transpose() * dy;
}

// ------------------------------------------------------------------ Lstm

template <typename T>
Lstm<T>::Lstm(std::size_t input, std::size_t hidden)
    : w_ih("w_ih", {4 * hidden, input}),
      w_hh("w_hh", {4 * hidden, hidden}),
      bias("bias", {4 * hidden}),
      input_(input),
      hidden_(hidden) {}

template <typename T>
void Lstm<T>::init_input_weights(Rng& rng) {
  fill_uniform(w_ih.value, static_cast<T>(1.0 / std::sqrt(static_cast<double>(hidden_))), rng);
}

template <typename T>
void Lstm<T>::init(Rng& rng) {
  init_input_weights(rng);
  fill_uniform(w_hh.value, static_cast<T>(1.0 / std::sqrt(static_cast<double>(hidden_))), rng);
  std::fill(bias.value.begin(), bias.value.end(), T(0));
  std::fill(bias.value.begin() + static_cast<std::ptrdiff_t>(hidden_),
            bias.value.begin() + static_cast<std::ptrdiff_t>(2 * hidden_), T(1));
}

template <typename T>
void Lstm<T>::forward(const Matrix<T>& x, std::size_t steps, std::size_t batch, Cache& cache) const {
  if (static_cast<std::size_t>(x.rows()) != input_ || static_cast<std::size_t>(x.cols()) != steps * batch) {
    throw ShapeError("lstm input must be " + std::to_string(input_) + " x " +
                     std::to_string(steps * batch));
  }
  const auto H = static_cast<Eigen::Index>(hidden_);
  const auto B = static_cast<Eigen::Index>(batch);
  ConstRowMatrixMap<T> wih(w_ih.value.data(), 4 * hidden_, input_);
  ConstRowMatrixMap<T> whh(w_hh.value.data(), 4 * hidden_, hidden_);
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> b(bias.value.data(), 4 * hidden_);

  cache.steps = steps;
  cache.batch = batch;
  cache.input = &x;
  cache.gates.noalias() = wih * x;
  cache.gates.colwise() += b;
  cache.cell.resize(H, x.cols());
  cache.hidden.resize(H, x.cols());
  Matrix<T> rec(4 * H, B);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto col = static_cast<Eigen::Index>(t) * B;
    auto g = cache.gates.middleCols(col, B);
    if (t > 0) {
      rec.noalias() = whh * cache.hidden.middleCols(col - B, B);
      g += rec;
    }
    g.topRows(2 * H) = g.topRows(2 * H).unaryExpr([](T v) { return sigmoid(v); });
    g.middleRows(2 * H, H) = g.middleRows(2 * H, H).array().tanh().matrix();
    g.bottomRows(H) = g.bottomRows(H).unaryExpr([](T v) { return sigmoid(v); });
    auto c = cache.cell.middleCols(col, B);
    c = g.topRows(H).cwiseProduct(g.middleRows(2 * H, H));
    if (t > 0) c += g.middleRows(H, H).cwiseProduct(cache.cell.middleCols(col - B, B));
    cache.hidden.middleCols(col, B) = g.bottomRows(H).cwiseProduct(c.array().tanh().matrix());
  }
}

template <typename T>
Matrix<T> Lstm<T>::backward(const Cache& cache, const Matrix<T>& dh_in) {
  const auto H = static_cast<Eigen::Index>(hidden_);
  const auto B = static_cast<Eigen::Index>(cache.batch);
  const auto steps = static_cast<Eigen::Index>(cache.steps);
  ConstRowMatrixMap<T> wih(w_ih.value.data(), 4 * hidden_, input_);
  ConstRowMatrixMap<T> whh(w_hh.value.data(), 4 * hidden_, hidden_);

  Matrix<T> dpre(4 * H, steps * B);
  Matrix<T> dh_next = Matrix<T>::Zero(H, B);
  Matrix<T> dc_next = Matrix<T>::Zero(H, B);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const Eigen::Index col = t * B;
    const auto g = cache.gates.middleCols(col, B).array();
    const auto gi = g.topRows(H), gf = g.middleRows(H, H), gg = g.middleRows(2 * H, H),
               go = g.bottomRows(H);
    const Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic> tc = cache.cell.middleCols(col, B).array().tanh();
    const Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic> dh = dh_in.middleCols(col, B).array() + dh_next.array();
    const Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic> dc = dh * go * (T(1) - tc * tc) + dc_next.array();
    auto d = dpre.middleCols(col, B).array();
    d.topRows(H) = dc * gg * gi * (T(1) - gi);
    if (t > 0) {
      d.middleRows(H, H) = dc * cache.cell.middleCols(col - B, B).array() * gf * (T(1) - gf);
    } else {
      d.middleRows(H, H).setZero();
    }
    d.middleRows(2 * H, H) = dc * gi * (T(1) - gg * gg);
    d.bottomRows(H) = dh * tc * go * (T(1) - go);
    dc_next = (dc * gf).matrix();
    dh_next.noalias() = whh.transpose() * dpre.middleCols(col, B);
  }
  RowMatrixMap<T> dwih(w_ih.grad.data(), 4 * hidden_, input_);
  RowMatrixMap<T> dwhh(w_hh.grad.data(), 4 * hidden_, hidden_);
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(bias.grad.data(), 4 * hidden_);
  dwih.noalias() += dpre * cache.input->transpose();
  if (steps > 1) {
    dwhh.noalias() += dpre.rightCols((steps - 1) * B) * cache.hidden.leftCols((steps - 1) * B).transpose();
  }
  db += dpre.rowwise().sum();
  return wih.transpose() * dpre;
}

template <typename T>
LstmStack<T>::LstmStack(std::size_t input, std::size_t hidden, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) layers.emplace_back(i == 0 ? input : hidden, hidden);
}

template <typename T>
const Matrix<T>& LstmStack<T>::forward(const Matrix<T>& x, std::size_t steps, std::size_t batch,
                                       Cache& cache) const {
  cache.resize(layers.size());
  const Matrix<T>* in = &x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].forward(*in, steps, batch, cache[i]);
    in = &cache[i].hidden;
  }
  return *in;
}

template <typename T>
Matrix<T> LstmStack<T>::backward(const Cache& cache, const Matrix<T>& dh_top) {
  Matrix<T> grad = dh_top;
  for (std::size_t i = layers.size(); i-- > 0;) grad = layers[i].backward(cache[i], grad);
  return grad;
}

template <typename T>
void LstmStack<T>::init(Rng& rng) {
  for (auto& l : layers) l.init(rng);
}

template <typename T>
void LstmStack<T>::visit(const ParamVisitor<T>& f) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].visit([&](Param<T>& p) { f(p); });
  }
}

// ------------------------------------------------------------------ Mmtm

template <typename T>
Mmtm<T>::Mmtm(std::size_t ca, std::size_t cb, std::size_t bottleneck)
    : squeeze(ca + cb, bottleneck), excite_a(bottleneck, ca), excite_b(bottleneck, cb), ca_(ca), cb_(cb) {}

template <typename T>
void Mmtm<T>::init(Rng& rng) {
  squeeze.init(rng, true);
  excite_a.init(rng, false);
  excite_b.init(rng, false);
}

template <typename T>
void Mmtm<T>::forward(const Matrix<T>& sa, const Matrix<T>& sb, Cache& cache) const {
  if (static_cast<std::size_t>(sa.rows()) != ca_ || static_cast<std::size_t>(sb.rows()) != cb_ ||
      sa.cols() != sb.cols()) {
    throw ShapeError("mmtm channel mismatch: expected " + std::to_string(ca_) + " and " +
                     std::to_string(cb_) + " channels, got " + std::to_string(sa.rows()) +
                     " and " + std::to_string(sb.rows()));
  }
  cache.joint.resize(sa.rows() + sb.rows(), sa.cols());
  cache.joint << sa, sb;
  cache.z = squeeze.forward(cache.joint).cwiseMax(T(0));
  cache.gate_a = excite_a.forward(cache.z).unaryExpr([](T v) { return T(2) * sigmoid(v); });
  cache.gate_b = excite_b.forward(cache.z).unaryExpr([](T v) { return T(2) * sigmoid(v); });
}

template <typename T>
std::pair<Matrix<T>, Matrix<T>> Mmtm<T>::backward(const Cache& cache, const Matrix<T>& dgate_a,
                                                  const Matrix<T>& dgate_b) {
  // d/dx 2 sigmoid(x) = E (1 - E / 2) with E = 2 sigmoid(x).
  const Matrix<T> dpa =
      (dgate_a.array() * cache.gate_a.array() * (T(1) - cache.gate_a.array() / T(2))).matrix();
  const Matrix<T> dpb =
      (dgate_b.array() * cache.gate_b.array() * (T(1) - cache.gate_b.array() / T(2))).matrix();
  Matrix<T> dz = excite_a.backward(cache.z, dpa) + excite_b.backward(cache.z, dpb);
  dz = (cache.z.array() > T(0)).select(dz, T(0));
  const Matrix<T> djoint = squeeze.backward(cache.joint, dz);
  return {djoint.topRows(static_cast<Eigen::Index>(ca_)),
          djoint.bottomRows(static_cast<Eigen::Index>(cb_))};
}

template <typename T>
std::pair<Tensor4<T>, Tensor4<T>> mmtm_recalibrate(const Mmtm<T>& module, const Tensor4<T>& a,
                                                   const Tensor4<T>& b) {
  if (a.n != b.n) throw ShapeError("mmtm: streams disagree on batch size");
  typename Mmtm<T>::Cache cache;
  module.forward(global_average_pool(a), global_average_pool(b), cache);
  auto scale = [](const Tensor4<T>& x, const Matrix<T>& gate) {
    Tensor4<T> out = x;
    for (std::size_t i = 0; i < x.n; ++i) {
      for (std::size_t c = 0; c < x.c; ++c) {
        const T g = gate(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i));
        T* p = out.image(i) + c * x.plane();
        for (std::size_t k = 0; k < x.plane(); ++k) p[k] *= g;
      }
    }
    return out;
  };
  return {scale(a, cache.gate_a), scale(b, cache.gate_b)};
}

// ------------------------------------------------------------------ Head

template <typename T>
Matrix<T> Head<T>::forward(const Matrix<T>& x, Cache& cache) const {
  cache.input = x;
  cache.hidden = fc1.forward(x).cwiseMax(T(0));
  return fc2.forward(cache.hidden);
}

template <typename T>
Matrix<T> Head<T>::backward(const Cache& cache, const Matrix<T>& dlogit) {
  Matrix<T> dh = fc2.backward(cache.hidden, dlogit);
  dh = (cache.hidden.array() > T(0)).select(dh, T(0));
  return fc1.backward(cache.input, dh);
}

#define GAZENET_INSTANTIATE(T)                                                             \
  template void fill_uniform<T>(AlignedVector<T>&, T, Rng&);                                \
  template class Conv2d<T>;                                                                \
  template class BatchNorm2d<T>;                                                           \
  template class ConvBlock<T>;                                                             \
  template class ConvStack<T>;                                                             \
  template class TaskConv<T>;                                                              \
  template Matrix<T> global_average_pool<T>(const Tensor4<T>&);                           \
  template void global_average_pool_backward<T>(const Matrix<T>&, Tensor4<T>&);           \
  template class Linear<T>;                                                                \
  template class Lstm<T>;                                                                  \
  template class LstmStack<T>;                                                             \
  template class Mmtm<T>;                                                                  \
  template std::pair<Tensor4<T>, Tensor4<T>> mmtm_recalibrate<T>(const Mmtm<T>&,           \
                                                                 const Tensor4<T>&,        \
                                                                 const Tensor4<T>&);       \
  template class Head<T>;

GAZENET_INSTANTIATE(float)
GAZENET_INSTANTIATE(double)

}  // namespace gazenet::nn
