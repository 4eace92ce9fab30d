#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gazenet/array_io.hpp"
#include "gazenet/model/model.hpp"

namespace gazenet::explain {

enum class CamLayer { kSpatialVideoTaskConv, kTemporalVideoTaskConv };

std::string to_string(CamLayer layer);
// "spatial.video_taskconv" or "temporal.video_taskconv"; throws ConfigError.
CamLayer parse_cam_layer(const std::string& name);

// Per-timestep weights; each vector sums to 1.
struct TemporalSaliency {
  std::vector<double> temporal_branch;
  std::vector<double> spatial_branch;
  std::vector<double> combined;
};

struct SaliencyResult {
  std::size_t task_id = 0;
  std::string layer_name;
  FloatArray spatial;  // T x H x W, max-normalized per timestep
  TemporalSaliency temporal;
};

// Raw Grad-CAM: ReLU(sum_c w_c A_c) with w_c the spatial mean of dlogit/dA_c.
// activation and gradient are T x C x h x w; the result is T x h x w.
FloatArray cam_from_activations(const Tensor4<float>& activation, const Tensor4<float>& gradient);

// Bilinear resize of each T x h x w plane to T x out_h x out_w (half-pixel
// centers, edge clamped).
FloatArray upsample_bilinear(const FloatArray& maps, std::size_t out_h, std::size_t out_w);

// Divides each plane by its maximum; all-zero planes stay zero.
void max_normalize(FloatArray& maps);

// Grad-CAM for one sample, upsampled to the model's frame size.
FloatArray grad_cam(DualBranchModel<float>& model, const preprocess::AlignedSample& sample, std::size_t task,
                    CamLayer layer, InferenceMode mode = InferenceMode::kFullMultimodal,
                    const ModalityStats* stats = nullptr);

// Gradient-norm weights of the task logit w.r.t. each branch's LSTM input at
// every timestep. All-zero gradients give uniform weights.
TemporalSaliency temporal_saliency(DualBranchModel<float>& model, const preprocess::AlignedSample& sample,
                                   std::size_t task, InferenceMode mode = InferenceMode::kFullMultimodal,
                                   const ModalityStats* stats = nullptr);

SaliencyResult explain_sample(DualBranchModel<float>& model, const preprocess::AlignedSample& sample,
                              std::size_t task, CamLayer layer,
                              InferenceMode mode = InferenceMode::kFullMultimodal,
                              const ModalityStats* stats = nullptr);

// Weighted center of mass (row, col) of one H x W plane of `maps`.
std::pair<double, double> mass_center(const FloatArray& maps, std::size_t t);

// Output directory: meta.txt, spatial.arr, temporal_{branch}.arr,
// frames.arr (the sample's frames, for overlays).
void save_saliency(const std::filesystem::path& dir, const SaliencyResult& result,
                   const preprocess::AlignedSample& sample);
struct SavedSaliency {
  SaliencyResult result;
  FloatArray frames;
  std::string participant_id, video_id;
};
SavedSaliency load_saliency(const std::filesystem::path& dir);

// 8-bit RGB image, row-major H x W x 3.
struct Image {
  std::size_t height = 0, width = 0;
  std::vector<std::uint8_t> rgb;
};

// Frame t of a T x 3 x H x W array blended with a heat colormap of map t.
Image render_overlay(const FloatArray& frames, const FloatArray& maps, std::size_t t, double alpha = 0.5);
// Line plot of the three temporal saliency curves.
Image render_temporal_plot(const TemporalSaliency& saliency, std::size_t height = 160, std::size_t width = 480);
void write_ppm(const std::filesystem::path& path, const Image& image);

}  // namespace gazenet::explain
