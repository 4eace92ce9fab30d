#include "gazenet/model/config.hpp"

#include <sstream>

#include "gazenet/dimensions.hpp"
#include "gazenet/error.hpp"

namespace gazenet {
namespace {

std::string join(const std::vector<std::size_t>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
  return out.str();
}

std::vector<std::size_t> split_sizes(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const long long v = parse_int(item, key);
    if (v <= 0) throw ConfigError(key + ": channel counts must be positive");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

}  // namespace

std::size_t ModelConfig::mmtm_bottleneck() const {
  return std::max<std::size_t>(1, spatial_features() / 4);
}

void ModelConfig::validate() const {
  auto positive = [](const char* name, std::size_t v) {
    if (v == 0) throw ConfigError(std::string("model.") + name + " must be positive");
  };
  positive("n_tasks", n_tasks);
  positive("steps", steps);
  positive("frame_height", frame_height);
  positive("frame_width", frame_width);
  positive("pupil_size", pupil_size);
  positive("video_task_channels", video_task_channels);
  positive("pupil_task_channels", pupil_task_channels);
  positive("lstm_hidden", lstm_hidden);
  positive("shared_lstm_layers", shared_lstm_layers);
  positive("head_hidden", head_hidden);
  if (n_tasks > kNumTasks) throw ConfigError("model.n_tasks exceeds the number of dimensions");
  for (const auto* list : {&video_channels, &pupil_channels, &attention_channels}) {
    if (list->empty()) throw ConfigError("model: channel lists must be nonempty");
    for (auto c : *list) positive("channels", c);
  }
  // Every pooling stage halves (floor) the map; it must not vanish.
  auto check_pool = [](const char* what, std::size_t h, std::size_t w, std::size_t stages) {
    if ((h >> stages) == 0 || (w >> stages) == 0) {
      throw ConfigError(std::string("model: ") + what + " too small for " +
                        std::to_string(stages) + " pooling stages");
    }
  };
  check_pool("frames", frame_height, frame_width, video_channels.size());
  check_pool("attention maps", frame_height, frame_width, attention_channels.size());
  check_pool("pupil images", pupil_size, pupil_size, pupil_channels.size());
  if ((frame_height >> video_channels.size()) != (frame_height >> attention_channels.size()) ||
      (frame_width >> video_channels.size()) != (frame_width >> attention_channels.size())) {
    throw ConfigError("model: video and attention backbones must end at the same resolution");
  }
}

void ModelConfig::write(KeyValueDocument& doc) const {
  auto& g = doc.globals;
  g["model.n_tasks"] = std::to_string(n_tasks);
  g["model.steps"] = std::to_string(steps);
  g["model.frame_height"] = std::to_string(frame_height);
  g["model.frame_width"] = std::to_string(frame_width);
  g["model.pupil_size"] = std::to_string(pupil_size);
  g["model.video_channels"] = join(video_channels);
  g["model.pupil_channels"] = join(pupil_channels);
  g["model.attention_channels"] = join(attention_channels);
  g["model.video_task_channels"] = std::to_string(video_task_channels);
  g["model.pupil_task_channels"] = std::to_string(pupil_task_channels);
  g["model.lstm_hidden"] = std::to_string(lstm_hidden);
  g["model.shared_lstm_layers"] = std::to_string(shared_lstm_layers);
  g["model.head_hidden"] = std::to_string(head_hidden);
}

ModelConfig ModelConfig::read(const KeyValueDocument& doc) {
  ModelConfig c;
  const auto& g = doc.globals;
  auto size = [&](const char* key, std::size_t& dst) {
    const std::string k = std::string("model.") + key;
    const auto v = get_int(g, k, static_cast<long long>(dst));
    if (v <= 0) throw ConfigError(k + " must be positive");
    dst = static_cast<std::size_t>(v);
  };
  auto list = [&](const char* key, std::vector<std::size_t>& dst) {
    const std::string k = std::string("model.") + key;
    if (auto it = g.find(k); it != g.end()) dst = split_sizes(k, it->second);
  };
  size("n_tasks", c.n_tasks);
  size("steps", c.steps);
  size("frame_height", c.frame_height);
  size("frame_width", c.frame_width);
  size("pupil_size", c.pupil_size);
  list("video_channels", c.video_channels);
  list("pupil_channels", c.pupil_channels);
  list("attention_channels", c.attention_channels);
  size("video_task_channels", c.video_task_channels);
  size("pupil_task_channels", c.pupil_task_channels);
  size("lstm_hidden", c.lstm_hidden);
  size("shared_lstm_layers", c.shared_lstm_layers);
  size("head_hidden", c.head_hidden);
  c.validate();
  return c;
}

std::string to_string(InferenceMode mode) {
  switch (mode) {
    case InferenceMode::kFullMultimodal: return "full";
    case InferenceMode::kVideoOnlyZero: return "video-only-zero";
    case InferenceMode::kVideoOnlyMeanFill: return "video-only-mean";
  }
  return "?";
}

InferenceMode parse_inference_mode(const std::string& text) {
  if (text == "full" || text == "full_multimodal") return InferenceMode::kFullMultimodal;
  if (text == "video-only-zero" || text == "video_only_zero") return InferenceMode::kVideoOnlyZero;
  if (text == "video-only-mean" || text == "video_only_meanfill") return InferenceMode::kVideoOnlyMeanFill;
  throw ConfigError("unknown inference mode '" + text + "'");
}

}  // namespace gazenet
