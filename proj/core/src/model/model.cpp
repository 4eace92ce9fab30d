#include "gazenet/model/model.hpp"

#include <cmath>
#include <cstdlib>

#include "gazenet/error.hpp"

namespace gazenet {
namespace {

using nn::Rng;

template <typename T>
void add_into(Tensor4<T>& dst, const Tensor4<T>& src) {
  if (dst.v.empty()) {
    dst = src;
    return;
  }
  for (std::size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src.v[i];
}

template <typename T>
ParamGroup<T> stack_group(const std::string& name, nn::ConvStack<T>& stack) {
  ParamGroup<T> g{name, {}, {}, {}};
  for (std::size_t i = 0; i < stack.blocks.size(); ++i) {
    auto& b = stack.blocks[i];
    const std::string p = "block" + std::to_string(i) + ".";
    g.params.push_back({p + "conv.weight", &b.conv.weight});
    g.params.push_back({p + "conv.bias", &b.conv.bias});
    g.params.push_back({p + "bn.gamma", &b.bn.gamma});
    g.params.push_back({p + "bn.beta", &b.bn.beta});
    g.buffers.push_back({p + "bn.running_mean", &b.bn.running_mean});
    g.buffers.push_back({p + "bn.running_var", &b.bn.running_var});
  }
  g.initialize = [&stack](Rng& rng) {
    for (auto& b : stack.blocks) {
      b.conv.init(rng);
      std::fill(b.bn.gamma.value.begin(), b.bn.gamma.value.end(), T(1));
      std::fill(b.bn.beta.value.begin(), b.bn.beta.value.end(), T(0));
      std::fill(b.bn.running_mean.begin(), b.bn.running_mean.end(), T(0));
      std::fill(b.bn.running_var.begin(), b.bn.running_var.end(), T(1));
    }
  };
  return g;
}

template <typename T>
ParamGroup<T> taskconv_group(const std::string& name, nn::TaskConv<T>& tc) {
  ParamGroup<T> g{name, {{"conv.weight", &tc.conv.weight}, {"conv.bias", &tc.conv.bias}}, {}, {}};
  g.initialize = [&tc](Rng& rng) { tc.init(rng); };
  return g;
}

template <typename T>
void add_lstm(ParamGroup<T>& g, const std::string& prefix, nn::Lstm<T>& l) {
  g.params.push_back({prefix + "w_ih", &l.w_ih});
  g.params.push_back({prefix + "w_hh", &l.w_hh});
  g.params.push_back({prefix + "bias", &l.bias});
}

template <typename T>
ParamGroup<T> lstm_stack_group(const std::string& name, nn::LstmStack<T>& stack) {
  ParamGroup<T> g{name, {}, {}, {}};
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    add_lstm(g, "layer" + std::to_string(i) + ".", stack.layers[i]);
  }
  g.initialize = [&stack](Rng& rng) { stack.init(rng); };
  return g;
}

template <typename T>
void add_linear(ParamGroup<T>& g, const std::string& prefix, nn::Linear<T>& l) {
  g.params.push_back({prefix + "weight", &l.weight});
  g.params.push_back({prefix + "bias", &l.bias});
}

template <typename T>
ParamGroup<T> head_group(const std::string& name, nn::Head<T>& head) {
  ParamGroup<T> g{name, {}, {}, {}};
  add_linear(g, "fc1.", head.fc1);
  add_linear(g, "fc2.", head.fc2);
  g.initialize = [&head](Rng& rng) { head.init(rng); };
  return g;
}

template <typename T>
void copy_frames(const FloatArray& src, std::size_t b, std::size_t batch, Tensor4<T>& dst) {
  const std::size_t size = dst.image_size();
  for (std::size_t t = 0; t * size < src.data.size(); ++t) {
    const float* s = src.data.data() + t * size;
    std::copy(s, s + size, dst.image(t * batch + b));
  }
}

template <typename T>
void fill_images(const FloatArray& image, Tensor4<T>& dst) {
  for (std::size_t i = 0; i < dst.n; ++i) std::copy(image.data.begin(), image.data.end(), dst.image(i));
}

void require_shape(const FloatArray& a, const std::vector<std::size_t>& shape, const std::string& what) {
  if (a.shape != shape) {
    throw ShapeError(what + " has shape " + shape_to_string(a.shape) + ", model expects " +
                     shape_to_string(shape));
  }
}

}  // namespace

std::uint64_t group_seed(std::uint64_t seed, const std::string& group) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : group) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

template <typename T>
std::size_t ParamGroup<T>::size() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.param->size();
  return n;
}

// ------------------------------------------------------------------ input

template <typename T>
ModelInput<T> assemble_input(const ModelConfig& config,
                             const std::vector<const preprocess::AlignedSample*>& samples,
                             InferenceMode mode, const ModalityStats* stats, ModalityMask mask) {
  if (samples.empty()) throw ValidationError("cannot assemble an empty batch");
  if (mode == InferenceMode::kVideoOnlyMeanFill && stats == nullptr) {
    throw ConfigError("video-only mean-fill inference requires modality statistics");
  }
  const std::size_t batch = samples.size(), steps = config.steps, n = batch * steps;
  const std::size_t h = config.frame_height, w = config.frame_width, s = config.pupil_size;
  ModelInput<T> in;
  in.batch = batch;
  in.steps = steps;
  in.frames = Tensor4<T>(n, 3, h, w);
  in.pupil = Tensor4<T>(n, 2, s, s);
  in.attention = Tensor4<T>(n, 1, h, w);
  const bool gaze_from_samples = mode == InferenceMode::kFullMultimodal;
  for (std::size_t b = 0; b < batch; ++b) {
    const auto& smp = *samples[b];
    const std::string id = smp.participant_id + "/" + smp.video_id;
    require_shape(smp.frames, {steps, 3, h, w}, id + " frames");
    copy_frames(smp.frames, b, batch, in.frames);
    if (gaze_from_samples && mask.pupil) {
      require_shape(smp.pupil_images, {steps, 2, s, s}, id + " pupil images");
      copy_frames(smp.pupil_images, b, batch, in.pupil);
    }
    if (gaze_from_samples && mask.attention) {
      require_shape(smp.attention_maps, {steps, 1, h, w}, id + " attention maps");
      copy_frames(smp.attention_maps, b, batch, in.attention);
    }
  }
  if (mode == InferenceMode::kVideoOnlyMeanFill) {
    if (mask.pupil) {
      require_shape(stats->mean_pupil_image, {2, s, s}, "mean pupil image");
      fill_images(stats->mean_pupil_image, in.pupil);
    }
    if (mask.attention) {
      require_shape(stats->mean_attention_map, {1, h, w}, "mean attention map");
      fill_images(stats->mean_attention_map, in.attention);
    }
  }
  return in;
}

ModalityStats compute_modality_stats(const std::vector<const preprocess::AlignedSample*>& samples) {
  if (samples.empty()) throw ValidationError("modality statistics need at least one sample");
  auto mean_of = [&](auto member, const char* what) {
    const FloatArray& first = (*samples.front()).*member;
    if (first.shape.size() != 4) throw ShapeError(std::string(what) + " not loaded");
    const std::vector<std::size_t> image(first.shape.begin() + 1, first.shape.end());
    std::size_t size = 1;
    for (auto e : image) size *= e;
    std::vector<double> acc(size, 0.0);
    std::size_t count = 0;
    for (const auto* smp : samples) {
      const FloatArray& a = (*smp).*member;
      if (a.shape.size() != 4 || std::vector<std::size_t>(a.shape.begin() + 1, a.shape.end()) != image) {
        throw ShapeError(std::string(what) + " shapes differ across samples");
      }
      for (std::size_t t = 0; t < a.shape[0]; ++t, ++count) {
        const float* p = a.data.data() + t * size;
        for (std::size_t k = 0; k < size; ++k) acc[k] += p[k];
      }
    }
    FloatArray out;
    out.shape = image;
    out.data.resize(size);
    for (std::size_t k = 0; k < size; ++k) out.data[k] = static_cast<float>(acc[k] / static_cast<double>(count));
    return out;
  };
  ModalityStats stats;
  stats.mean_pupil_image = mean_of(&preprocess::AlignedSample::pupil_images, "pupil images");
  stats.mean_attention_map = mean_of(&preprocess::AlignedSample::attention_maps, "attention maps");
  return stats;
}

// ------------------------------------------------------------ temp heads

template <typename T>
TemporalHeads<T>::TemporalHeads(const ModelConfig& config) {
  for (std::size_t k = 0; k < config.n_tasks; ++k) heads.emplace_back(config.lstm_hidden, config.head_hidden);
}

template <typename T>
void TemporalHeads<T>::init(std::uint64_t seed) {
  Rng rng(group_seed(seed, "temporal.stage1_heads"));
  for (auto& h : heads) h.init(rng);
}

template <typename T>
ParamGroup<T> TemporalHeads<T>::group() {
  ParamGroup<T> g{"temporal.stage1_heads", {}, {}, {}};
  for (std::size_t k = 0; k < heads.size(); ++k) {
    add_linear(g, std::to_string(k) + ".fc1.", heads[k].fc1);
    add_linear(g, std::to_string(k) + ".fc2.", heads[k].fc2);
  }
  g.initialize = [this](Rng& rng) {
    for (auto& h : heads) h.init(rng);
  };
  return g;
}

// ------------------------------------------------------------------ model

template <typename T>
DualBranchModel<T>::DualBranchModel(const ModelConfig& config) : config_(config) {
  // Lets callers prove a code path never touches the network.
  if (std::getenv("GAZENET_DISABLE_MODEL") != nullptr) throw ConfigError("model construction disabled");
  config_.validate();
  const auto& c = config_;
  temporal.video_backbone = nn::ConvStack<T>(3, c.video_channels);
  temporal.pupil_encoder = nn::ConvStack<T>(2, c.pupil_channels);
  temporal.shared_lstm = nn::LstmStack<T>(c.temporal_features(), c.lstm_hidden, c.shared_lstm_layers);
  spatial.video_backbone = nn::ConvStack<T>(3, c.video_channels);
  spatial.attn_backbone = nn::ConvStack<T>(1, c.attention_channels);
  spatial.mmtm = nn::Mmtm<T>(c.video_task_channels, c.attention_channels.back(), c.mmtm_bottleneck());
  spatial.shared_lstm = nn::LstmStack<T>(c.spatial_features(), c.lstm_hidden, c.shared_lstm_layers);
  for (std::size_t k = 0; k < c.n_tasks; ++k) {
    temporal.video_taskconv.emplace_back(c.video_channels.back(), c.video_task_channels);
    temporal.pupil_taskconv.emplace_back(c.pupil_channels.back(), c.pupil_task_channels);
    spatial.video_taskconv.emplace_back(c.video_channels.back(), c.video_task_channels);
    spatial.task_lstm.emplace_back(c.lstm_hidden, c.lstm_hidden);
    heads.emplace_back(2 * c.lstm_hidden, c.head_hidden);
  }
}

template <typename T>
std::vector<ParamGroup<T>> DualBranchModel<T>::groups() {
  std::vector<ParamGroup<T>> out;
  const std::size_t n = config_.n_tasks;
  out.push_back(stack_group("temporal.video_backbone", temporal.video_backbone));
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(taskconv_group("temporal.video_taskconv." + std::to_string(k), temporal.video_taskconv[k]));
  }
  out.push_back(stack_group("temporal.pupil_encoder", temporal.pupil_encoder));
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(taskconv_group("temporal.pupil_taskconv." + std::to_string(k), temporal.pupil_taskconv[k]));
  }
  out.push_back(lstm_stack_group("temporal.shared_lstm", temporal.shared_lstm));
  out.push_back(stack_group("spatial.video_backbone", spatial.video_backbone));
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(taskconv_group("spatial.video_taskconv." + std::to_string(k), spatial.video_taskconv[k]));
  }
  out.push_back(stack_group("spatial.attn_backbone", spatial.attn_backbone));
  {
    ParamGroup<T> g{"spatial.mmtm", {}, {}, {}};
    add_linear(g, "squeeze.", spatial.mmtm.squeeze);
    add_linear(g, "excite_a.", spatial.mmtm.excite_a);
    add_linear(g, "excite_b.", spatial.mmtm.excite_b);
    g.initialize = [this](Rng& rng) { spatial.mmtm.init(rng); };
    out.push_back(std::move(g));
  }
  out.push_back(lstm_stack_group("spatial.shared_lstm", spatial.shared_lstm));
  for (std::size_t k = 0; k < n; ++k) {
    ParamGroup<T> g{"spatial.task_lstm." + std::to_string(k), {}, {}, {}};
    add_lstm(g, "", spatial.task_lstm[k]);
    auto* lstm = &spatial.task_lstm[k];
    g.initialize = [lstm](Rng& rng) { lstm->init(rng); };
    out.push_back(std::move(g));
  }
  for (std::size_t k = 0; k < n; ++k) out.push_back(head_group("head." + std::to_string(k), heads[k]));
  return out;
}

template <typename T>
ParamGroup<T> DualBranchModel<T>::group(const std::string& name) {
  for (auto& g : groups()) {
    if (g.name == name) return g;
  }
  throw ConfigError("unknown parameter group '" + name + "'");
}

template <typename T>
void DualBranchModel<T>::init(std::uint64_t seed) {
  for (auto& g : groups()) {
    Rng rng(group_seed(seed, g.name));
    g.initialize(rng);
  }
}

template <typename T>
void DualBranchModel<T>::init_group(const std::string& name, std::uint64_t seed) {
  auto g = group(name);
  Rng rng(group_seed(seed, name));
  g.initialize(rng);
}

template <typename T>
std::size_t DualBranchModel<T>::parameter_count() {
  std::size_t n = 0;
  for (const auto& g : groups()) n += g.size();
  return n;
}

template <typename T>
void DualBranchModel<T>::zero_grad() {
  for (auto& g : groups()) {
    for (auto& p : g.params) p.param->zero_grad();
  }
}

template <typename T>
void DualBranchModel<T>::check_input(const ModelInput<T>& in) const {
  const auto& c = config_;
  if (in.steps != c.steps) {
    throw ShapeError("input has " + std::to_string(in.steps) + " timesteps, model expects " +
                     std::to_string(c.steps));
  }
  const std::size_t n = in.batch * in.steps;
  if (in.batch == 0) throw ShapeError("empty batch");
  auto check = [&](const Tensor4<T>& x, std::size_t ch, std::size_t h, std::size_t w, const char* what) {
    if (x.n != n || x.c != ch || x.h != h || x.w != w) {
      throw ShapeError(std::string(what) + " tensor is " + std::to_string(x.n) + "x" + std::to_string(x.c) +
                       "x" + std::to_string(x.h) + "x" + std::to_string(x.w) + ", expected " +
                       std::to_string(n) + "x" + std::to_string(ch) + "x" + std::to_string(h) + "x" +
                       std::to_string(w));
    }
  };
  check(in.frames, 3, c.frame_height, c.frame_width, "frame");
  check(in.pupil, 2, c.pupil_size, c.pupil_size, "pupil image");
  check(in.attention, 1, c.frame_height, c.frame_width, "attention map");
}

template <typename T>
Matrix<T> DualBranchModel<T>::run(const ModelInput<T>& input, const RunOptions& options,
                                  const LogitGrad& grad, Probe<T>* probe) {
  check_input(input);
  const bool joint = options.phase == Phase::kJoint;
  if (!joint && options.temporal_heads == nullptr) {
    throw ConfigError("temporal-only pass needs the temporary heads");
  }
  std::vector<std::size_t> tasks = options.tasks;
  if (tasks.empty()) {
    for (std::size_t k = 0; k < config_.n_tasks; ++k) tasks.push_back(k);
  }
  for (auto k : tasks) {
    if (k >= config_.n_tasks) throw ConfigError("task " + std::to_string(k) + " out of range");
  }
  const std::size_t batch = input.batch, steps = input.steps, n = batch * steps;
  const auto H = static_cast<Eigen::Index>(config_.lstm_hidden);
  const auto B = static_cast<Eigen::Index>(batch);
  const auto cv = static_cast<Eigen::Index>(config_.video_task_channels);
  const auto cp = static_cast<Eigen::Index>(config_.pupil_task_channels);
  const auto cm = static_cast<Eigen::Index>(config_.attention_channels.back());
  const bool training = options.training;

  typename nn::ConvStack<T>::Cache tv_cache, tp_cache, sv_cache, sm_cache;
  const Tensor4<T>& video_t = temporal.video_backbone.forward(input.frames, training, tv_cache);
  const Tensor4<T>& pupil_t = temporal.pupil_encoder.forward(input.pupil, training, tp_cache);
  const Tensor4<T>* video_s = nullptr;
  const Tensor4<T>* attn = nullptr;
  Matrix<T> attn_pool;
  if (joint) {
    video_s = &spatial.video_backbone.forward(input.frames, training, sv_cache);
    attn = &spatial.attn_backbone.forward(input.attention, training, sm_cache);
    attn_pool = nn::global_average_pool(*attn);
  }
  if (training) {
    temporal.video_backbone.update_running(tv_cache);
    temporal.pupil_encoder.update_running(tp_cache);
    if (joint) {
      spatial.video_backbone.update_running(sv_cache);
      spatial.attn_backbone.update_running(sm_cache);
    }
  }

  Tensor4<T> d_video_t, d_pupil_t, d_video_s;
  Matrix<T> d_attn_pool;
  bool backbone_grad = false;

  Matrix<T> logits = Matrix<T>::Zero(static_cast<Eigen::Index>(config_.n_tasks), B);
  for (const std::size_t k : tasks) {
    const bool tap = probe != nullptr && probe->task == k;
    // Temporal path.
    Tensor4<T> tv, tp;
    temporal.video_taskconv[k].forward(video_t, tv);
    temporal.pupil_taskconv[k].forward(pupil_t, tp);
    Matrix<T> xt(cv + cp, static_cast<Eigen::Index>(n));
    xt.topRows(cv) = nn::global_average_pool(tv);
    xt.bottomRows(cp) = nn::global_average_pool(tp);
    typename nn::LstmStack<T>::Cache tl_cache;
    const Matrix<T>& ht = temporal.shared_lstm.forward(xt, steps, batch, tl_cache);

    // Spatial path: MMTM between the task conv output and the attention
    // stream, residual recalibration, then pooled features.
    Tensor4<T> sv;
    Matrix<T> sa, ga, gb, xs;
    typename nn::Mmtm<T>::Cache m_cache;
    typename nn::LstmStack<T>::Cache sl_cache;
    typename nn::Lstm<T>::Cache task_cache;
    if (joint) {
      spatial.video_taskconv[k].forward(*video_s, sv);
      sa = nn::global_average_pool(sv);
      spatial.mmtm.forward(sa, attn_pool, m_cache);
      // GAP(X + X * E) = GAP(X) * (1 + E) for channel gates.
      xs.resize(cv + cm, static_cast<Eigen::Index>(n));
      xs.topRows(cv) = sa.cwiseProduct((m_cache.gate_a.array() + T(1)).matrix());
      xs.bottomRows(cm) = attn_pool.cwiseProduct((m_cache.gate_b.array() + T(1)).matrix());
      const Matrix<T>& hs = spatial.shared_lstm.forward(xs, steps, batch, sl_cache);
      spatial.task_lstm[k].forward(hs, steps, batch, task_cache);
    }

    typename nn::Head<T>::Cache h_cache;
    Matrix<T> logit;
    if (joint) {
      Matrix<T> z(2 * H, B);
      z.topRows(H) = ht.rightCols(B);
      z.bottomRows(H) = task_cache.hidden.rightCols(B);
      logit = heads[k].forward(z, h_cache);
    } else {
      logit = options.temporal_heads->heads[k].forward(ht.rightCols(B), h_cache);
    }
    logits.row(static_cast<Eigen::Index>(k)) = logit;
    if (tap) {
      probe->temporal_states = ht;
      probe->temporal_activation = tv;
      if (joint) {
        probe->spatial_states = task_cache.hidden;
        probe->spatial_activation = sv;
      }
    }
    if (!grad) continue;
    const Matrix<T> dlogit = grad(k, logit);
    if (dlogit.size() == 0) continue;
    if (dlogit.rows() != 1 || dlogit.cols() != B) throw ShapeError("logit gradient must be 1 x batch");

    const Matrix<T> dz = joint ? heads[k].backward(h_cache, dlogit)
                               : options.temporal_heads->heads[k].backward(h_cache, dlogit);
    const bool need_din = options.backbone_backward;
    backbone_grad = backbone_grad || need_din;

    {
      Matrix<T> dht = Matrix<T>::Zero(H, static_cast<Eigen::Index>(n));
      dht.rightCols(B) = dz.topRows(H);
      const Matrix<T> dxt = temporal.shared_lstm.backward(tl_cache, dht);
      Tensor4<T> dtv(tv.n, tv.c, tv.h, tv.w), dtp(tp.n, tp.c, tp.h, tp.w);
      nn::global_average_pool_backward<T>(dxt.topRows(cv), dtv);
      nn::global_average_pool_backward<T>(dxt.bottomRows(cp), dtp);
      if (tap) {
        probe->temporal_input_grad = dxt;
        probe->temporal_activation_grad = dtv;
      }
      Tensor4<T> tmp;
      temporal.video_taskconv[k].backward(video_t, tv, dtv, need_din ? &tmp : nullptr);
      if (need_din) add_into(d_video_t, tmp);
      temporal.pupil_taskconv[k].backward(pupil_t, tp, dtp, need_din ? &tmp : nullptr);
      if (need_din) add_into(d_pupil_t, tmp);
    }
    if (joint) {
      Matrix<T> dtask = Matrix<T>::Zero(H, static_cast<Eigen::Index>(n));
      dtask.rightCols(B) = dz.bottomRows(H);
      const Matrix<T> dhs = spatial.task_lstm[k].backward(task_cache, dtask);
      const Matrix<T> dxs = spatial.shared_lstm.backward(sl_cache, dhs);
      const Matrix<T> dfa = dxs.topRows(cv), dfb = dxs.bottomRows(cm);
      Matrix<T> dsa = dfa.cwiseProduct((m_cache.gate_a.array() + T(1)).matrix());
      Matrix<T> dsb = dfb.cwiseProduct((m_cache.gate_b.array() + T(1)).matrix());
      auto [dsa_gate, dsb_gate] =
          spatial.mmtm.backward(m_cache, dfa.cwiseProduct(sa), dfb.cwiseProduct(attn_pool));
      dsa += dsa_gate;
      dsb += dsb_gate;
      Tensor4<T> dsv(sv.n, sv.c, sv.h, sv.w);
      nn::global_average_pool_backward<T>(dsa, dsv);
      if (tap) {
        probe->spatial_input_grad = dxs;
        probe->spatial_activation_grad = dsv;
      }
      Tensor4<T> tmp;
      spatial.video_taskconv[k].backward(*video_s, sv, dsv, need_din ? &tmp : nullptr);
      if (need_din) {
        add_into(d_video_s, tmp);
        if (d_attn_pool.size() == 0) {
          d_attn_pool = dsb;
        } else {
          d_attn_pool += dsb;
        }
      }
    }
  }

  if (backbone_grad) {
    temporal.video_backbone.backward(tv_cache, d_video_t, false, nullptr);
    temporal.pupil_encoder.backward(tp_cache, d_pupil_t, false, nullptr);
    if (joint) {
      spatial.video_backbone.backward(sv_cache, d_video_s, false, nullptr);
      Tensor4<T> d_attn(attn->n, attn->c, attn->h, attn->w);
      nn::global_average_pool_backward<T>(d_attn_pool, d_attn);
      spatial.attn_backbone.backward(sm_cache, d_attn, false, nullptr);
    }
  }
  return logits;
}

template <typename T>
Matrix<T> DualBranchModel<T>::predict(const ModelInput<T>& input) {
  RunOptions options;
  options.training = false;
  return run(input, options).unaryExpr([](T v) { return nn::sigmoid(v); });
}

template <typename T>
BranchStates<T> DualBranchModel<T>::branch_states(const ModelInput<T>& input, std::size_t task) {
  RunOptions options;
  options.tasks = {task};
  Probe<T> probe;
  probe.task = task;
  run(input, options, {}, &probe);
  return {std::move(probe.temporal_states), std::move(probe.spatial_states)};
}

#define GAZENET_MODEL_INSTANTIATE(T)                                                            \
  template struct ParamGroup<T>;                                                                 \
  template struct TemporalHeads<T>;                                                              \
  template class DualBranchModel<T>;                                                             \
  template ModelInput<T> assemble_input<T>(const ModelConfig&,                                   \
                                           const std::vector<const preprocess::AlignedSample*>&, \
                                           InferenceMode, const ModalityStats*, ModalityMask);

GAZENET_MODEL_INSTANTIATE(float)
GAZENET_MODEL_INSTANTIATE(double)

}  // namespace gazenet
