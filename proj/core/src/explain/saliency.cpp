#include "gazenet/explain/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "gazenet/error.hpp"
#include "gazenet/kv.hpp"

namespace gazenet::explain {
namespace {

Probe<float> backprop_logit(DualBranchModel<float>& model, const preprocess::AlignedSample& sample,
                            std::size_t task, InferenceMode mode, const ModalityStats* stats) {
  if (task >= model.config().n_tasks) throw ConfigError("task " + std::to_string(task) + " out of range");
  const auto input = assemble_input<float>(model.config(), {&sample}, mode, stats);
  DualBranchModel<float>::RunOptions options;
  options.training = false;
  options.tasks = {task};
  options.backbone_backward = false;
  Probe<float> probe;
  probe.task = task;
  model.run(input, options, [](std::size_t, const Matrix<float>& z) { return Matrix<float>::Ones(1, z.cols()); },
            &probe);
  return probe;
}

std::vector<double> column_norms(const Matrix<float>& g) {
  std::vector<double> out(static_cast<std::size_t>(g.cols()));
  for (Eigen::Index c = 0; c < g.cols(); ++c) out[static_cast<std::size_t>(c)] = g.col(c).template cast<double>().norm();
  return out;
}

std::vector<double> normalized(std::vector<double> w) {
  double sum = 0;
  for (double v : w) sum += v;
  if (!(sum > 0) || !std::isfinite(sum)) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
  } else {
    for (double& v : w) v /= sum;
  }
  return w;
}

FloatArray vector_array(const std::vector<double>& v) {
  FloatArray a;
  a.shape = {v.size()};
  a.data.assign(v.begin(), v.end());
  return a;
}

std::vector<double> array_vector(const FloatArray& a) { return {a.data.begin(), a.data.end()}; }

// Blue -> cyan -> yellow -> red ramp.
std::array<double, 3> heat(double v) {
  v = std::clamp(v, 0.0, 1.0);
  if (v < 1.0 / 3) return {0.0, 3 * v, 1.0};
  if (v < 2.0 / 3) return {3 * (v - 1.0 / 3), 1.0, 1.0 - 3 * (v - 1.0 / 3)};
  return {1.0, 1.0 - 3 * (v - 2.0 / 3), 0.0};
}

}  // namespace

std::string to_string(CamLayer layer) {
  return layer == CamLayer::kSpatialVideoTaskConv ? "spatial.video_taskconv" : "temporal.video_taskconv";
}

CamLayer parse_cam_layer(const std::string& name) {
  if (name == "spatial.video_taskconv") return CamLayer::kSpatialVideoTaskConv;
  if (name == "temporal.video_taskconv") return CamLayer::kTemporalVideoTaskConv;
  throw ConfigError("unknown Grad-CAM layer '" + name +
                    "' (expected spatial.video_taskconv or temporal.video_taskconv)");
}

FloatArray cam_from_activations(const Tensor4<float>& a, const Tensor4<float>& g) {
  if (!a.same_shape(g)) throw ShapeError("activation and gradient shapes differ");
  const std::size_t hw = a.plane();
  FloatArray out;
  out.shape = {a.n, a.h, a.w};
  out.data.assign(a.n * hw, 0.0f);
  for (std::size_t t = 0; t < a.n; ++t) {
    std::vector<double> acc(hw, 0.0);
    for (std::size_t c = 0; c < a.c; ++c) {
      const float* gp = g.image(t) + c * hw;
      const float* ap = a.image(t) + c * hw;
      double w = 0;
      for (std::size_t k = 0; k < hw; ++k) w += gp[k];
      w /= static_cast<double>(hw);
      for (std::size_t k = 0; k < hw; ++k) acc[k] += w * ap[k];
    }
    for (std::size_t k = 0; k < hw; ++k) out.data[t * hw + k] = static_cast<float>(std::max(0.0, acc[k]));
  }
  return out;
}

FloatArray upsample_bilinear(const FloatArray& maps, std::size_t out_h, std::size_t out_w) {
  if (maps.shape.size() != 3) throw ShapeError("expected T x h x w maps");
  const std::size_t T = maps.shape[0], h = maps.shape[1], w = maps.shape[2];
  FloatArray out;
  out.shape = {T, out_h, out_w};
  out.data.resize(T * out_h * out_w);
  auto coord = [](std::size_t i, std::size_t in, std::size_t outn) {
    const double s = (static_cast<double>(i) + 0.5) * static_cast<double>(in) / static_cast<double>(outn) - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(in - 1));
  };
  for (std::size_t t = 0; t < T; ++t) {
    const float* src = maps.data.data() + t * h * w;
    float* dst = out.data.data() + t * out_h * out_w;
    for (std::size_t y = 0; y < out_h; ++y) {
      const double sy = coord(y, h, out_h);
      const auto y0 = static_cast<std::size_t>(sy);
      const std::size_t y1 = std::min(y0 + 1, h - 1);
      const double fy = sy - static_cast<double>(y0);
      for (std::size_t x = 0; x < out_w; ++x) {
        const double sx = coord(x, w, out_w);
        const auto x0 = static_cast<std::size_t>(sx);
        const std::size_t x1 = std::min(x0 + 1, w - 1);
        const double fx = sx - static_cast<double>(x0);
        const double top = (1 - fx) * src[y0 * w + x0] + fx * src[y0 * w + x1];
        const double bottom = (1 - fx) * src[y1 * w + x0] + fx * src[y1 * w + x1];
        dst[y * out_w + x] = static_cast<float>((1 - fy) * top + fy * bottom);
      }
    }
  }
  return out;
}

void max_normalize(FloatArray& maps) {
  const std::size_t plane = maps.shape[1] * maps.shape[2];
  for (std::size_t t = 0; t < maps.shape[0]; ++t) {
    float* p = maps.data.data() + t * plane;
    const float m = *std::max_element(p, p + plane);
    if (m > 0) {
      for (std::size_t k = 0; k < plane; ++k) p[k] = std::min(1.0f, p[k] / m);
    }
  }
}

FloatArray grad_cam(DualBranchModel<float>& model, const preprocess::AlignedSample& sample, std::size_t task,
                    CamLayer layer, InferenceMode mode, const ModalityStats* stats) {
  const auto probe = backprop_logit(model, sample, task, mode, stats);
  const bool spatial = layer == CamLayer::kSpatialVideoTaskConv;
  auto cam = cam_from_activations(spatial ? probe.spatial_activation : probe.temporal_activation,
                                  spatial ? probe.spatial_activation_grad : probe.temporal_activation_grad);
  auto up = upsample_bilinear(cam, model.config().frame_height, model.config().frame_width);
  max_normalize(up);
  return up;
}

TemporalSaliency temporal_saliency(DualBranchModel<float>& model, const preprocess::AlignedSample& sample,
                                   std::size_t task, InferenceMode mode, const ModalityStats* stats) {
  const auto probe = backprop_logit(model, sample, task, mode, stats);
  const auto t = column_norms(probe.temporal_input_grad);
  const auto s = column_norms(probe.spatial_input_grad);
  std::vector<double> sum(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) sum[i] = t[i] + s[i];
  return {normalized(t), normalized(s), normalized(sum)};
}

SaliencyResult explain_sample(DualBranchModel<float>& model, const preprocess::AlignedSample& sample,
                              std::size_t task, CamLayer layer, InferenceMode mode, const ModalityStats* stats) {
  SaliencyResult r;
  r.task_id = task;
  r.layer_name = to_string(layer);
  r.spatial = grad_cam(model, sample, task, layer, mode, stats);
  r.temporal = temporal_saliency(model, sample, task, mode, stats);
  return r;
}

std::pair<double, double> mass_center(const FloatArray& maps, std::size_t t) {
  const std::size_t h = maps.shape[1], w = maps.shape[2];
  const float* p = maps.data.data() + t * h * w;
  double m = 0, ry = 0, rx = 0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      m += p[y * w + x];
      ry += p[y * w + x] * (static_cast<double>(y) + 0.5);
      rx += p[y * w + x] * (static_cast<double>(x) + 0.5);
    }
  }
  if (m <= 0) return {static_cast<double>(h) / 2, static_cast<double>(w) / 2};
  return {ry / m, rx / m};
}

void save_saliency(const std::filesystem::path& dir, const SaliencyResult& r, const preprocess::AlignedSample& sample) {
  std::filesystem::create_directories(dir);
  KeyValueDocument meta;
  meta.globals["participant_id"] = sample.participant_id;
  meta.globals["video_id"] = sample.video_id;
  meta.globals["task_id"] = std::to_string(r.task_id);
  meta.globals["task"] = std::string(dimension(static_cast<int>(r.task_id)).name);
  meta.globals["layer"] = r.layer_name;
  write_text_file(dir / "meta.txt", meta.serialize());
  write_array(dir / "spatial.arr", r.spatial);
  write_array(dir / "temporal_temporal_branch.arr", vector_array(r.temporal.temporal_branch));
  write_array(dir / "temporal_spatial_branch.arr", vector_array(r.temporal.spatial_branch));
  write_array(dir / "temporal_combined.arr", vector_array(r.temporal.combined));
  write_array(dir / "frames.arr", sample.frames);
}

SavedSaliency load_saliency(const std::filesystem::path& dir) {
  const auto meta = KeyValueDocument::load(dir / "meta.txt");
  SavedSaliency s;
  s.participant_id = require_string(meta.globals, "participant_id");
  s.video_id = require_string(meta.globals, "video_id");
  s.result.task_id = static_cast<std::size_t>(require_int(meta.globals, "task_id"));
  s.result.layer_name = require_string(meta.globals, "layer");
  s.result.spatial = read_float_array(dir / "spatial.arr");
  s.result.temporal.temporal_branch = array_vector(read_float_array(dir / "temporal_temporal_branch.arr"));
  s.result.temporal.spatial_branch = array_vector(read_float_array(dir / "temporal_spatial_branch.arr"));
  s.result.temporal.combined = array_vector(read_float_array(dir / "temporal_combined.arr"));
  s.frames = read_float_array(dir / "frames.arr");
  return s;
}

Image render_overlay(const FloatArray& frames, const FloatArray& maps, std::size_t t, double alpha) {
  if (frames.shape.size() != 4 || maps.shape.size() != 3) throw ShapeError("overlay: bad array ranks");
  const std::size_t h = frames.shape[2], w = frames.shape[3];
  if (maps.shape[1] != h || maps.shape[2] != w || t >= maps.shape[0] || t >= frames.shape[0]) {
    throw ShapeError("overlay: frames and maps disagree");
  }
  Image img{h, w, std::vector<std::uint8_t>(h * w * 3)};
  const float* f = frames.data.data() + t * 3 * h * w;
  const float* m = maps.data.data() + t * h * w;
  for (std::size_t k = 0; k < h * w; ++k) {
    const auto c = heat(m[k]);
    const double a = alpha * std::clamp(static_cast<double>(m[k]), 0.0, 1.0);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const double v = (1 - a) * f[ch * h * w + k] + a * c[ch];
      img.rgb[k * 3 + ch] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255));
    }
  }
  return img;
}

Image render_temporal_plot(const TemporalSaliency& s, std::size_t height, std::size_t width) {
  Image img{height, width, std::vector<std::uint8_t>(height * width * 3, 255)};
  const std::vector<const std::vector<double>*> curves{&s.temporal_branch, &s.spatial_branch, &s.combined};
  const std::array<std::array<std::uint8_t, 3>, 3> colors{{{200, 60, 40}, {40, 90, 200}, {20, 20, 20}}};
  double top = 0;
  for (const auto* c : curves) {
    for (double v : *c) top = std::max(top, v);
  }
  if (top <= 0) top = 1;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = *curves[i];
    if (c.size() < 2) continue;
    for (std::size_t x = 0; x < width; ++x) {
      const double pos = static_cast<double>(x) * static_cast<double>(c.size() - 1) / static_cast<double>(width - 1);
      const auto j = std::min(static_cast<std::size_t>(pos), c.size() - 2);
      const double v = c[j] + (pos - static_cast<double>(j)) * (c[j + 1] - c[j]);
      const auto y = static_cast<std::size_t>(std::lround((1.0 - v / top) * static_cast<double>(height - 1)));
      for (std::size_t ch = 0; ch < 3; ++ch) img.rgb[(y * width + x) * 3 + ch] = colors[i][ch];
    }
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write " + path.string());
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()), static_cast<std::streamsize>(image.rgb.size()));
  if (!out) throw LoadError("failed writing " + path.string());
}

}  // namespace gazenet::explain
