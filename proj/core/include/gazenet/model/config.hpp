#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gazenet/array_io.hpp"
#include "gazenet/kv.hpp"

namespace gazenet {

struct ModelConfig {
  std::size_t n_tasks = 15;
  std::size_t steps = 80;
  std::size_t frame_height = 90;
  std::size_t frame_width = 160;
  std::size_t pupil_size = 32;
  std::vector<std::size_t> video_channels{16, 32, 64};
  std::vector<std::size_t> pupil_channels{16, 32};
  std::vector<std::size_t> attention_channels{16, 32, 64};
  std::size_t video_task_channels = 32;
  std::size_t pupil_task_channels = 16;
  std::size_t lstm_hidden = 128;
  std::size_t shared_lstm_layers = 2;
  std::size_t head_hidden = 64;

  // (C_A + C_B) / 4 with A the video task conv and B the last attention stage.
  std::size_t mmtm_bottleneck() const;
  std::size_t temporal_features() const { return video_task_channels + pupil_task_channels; }
  std::size_t spatial_features() const { return video_task_channels + attention_channels.back(); }

  void validate() const;
  // Keys are prefixed "model.".
  void write(KeyValueDocument& doc) const;
  static ModelConfig read(const KeyValueDocument& doc);
  bool operator==(const ModelConfig&) const = default;
};

enum class InferenceMode { kFullMultimodal, kVideoOnlyZero, kVideoOnlyMeanFill };

std::string to_string(InferenceMode mode);
// Accepts "full", "video-only-zero", "video-only-mean" and the enum spellings.
InferenceMode parse_inference_mode(const std::string& text);

// Training-set means used to stand in for missing gaze streams.
struct ModalityStats {
  FloatArray mean_pupil_image;    // 2 x S x S
  FloatArray mean_attention_map;  // 1 x H x W
};

// Which gaze-derived streams a model variant consumes. Disabled streams are
// fed as zeros during both training and evaluation.
struct ModalityMask {
  bool pupil = true;
  bool attention = true;
  bool operator==(const ModalityMask&) const = default;
};

}  // namespace gazenet
