#include "fixtures.hpp"

#include <atomic>

#include "gazenet/kv.hpp"
#include <unistd.h>

namespace gazenet::testing {

std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("gazenet_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

ModelConfig miniature_config() {
  ModelConfig c;
  c.steps = 3;
  c.frame_height = 8;
  c.frame_width = 8;
  c.pupil_size = 8;
  c.video_channels = {2, 3, 4};
  c.attention_channels = {2, 3, 4};
  c.pupil_channels = {2, 3};
  c.video_task_channels = 3;
  c.pupil_task_channels = 2;
  c.lstm_hidden = 4;
  c.shared_lstm_layers = 2;
  c.head_hidden = 5;
  return c;
}

template <typename T>
ModelInput<T> random_input(const ModelConfig& c, std::size_t batch, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = batch * c.steps;
  ModelInput<T> in;
  in.batch = batch;
  in.steps = c.steps;
  in.frames = Tensor4<T>(n, 3, c.frame_height, c.frame_width);
  in.pupil = Tensor4<T>(n, 2, c.pupil_size, c.pupil_size);
  in.attention = Tensor4<T>(n, 1, c.frame_height, c.frame_width);
  for (auto* t : {&in.frames, &in.pupil, &in.attention}) {
    for (auto& v : t->v) v = static_cast<T>(u(rng));
  }
  return in;
}

template ModelInput<float> random_input<float>(const ModelConfig&, std::size_t, std::mt19937_64&);
template ModelInput<double> random_input<double>(const ModelConfig&, std::size_t, std::mt19937_64&);

preprocess::AlignedSample random_sample(const ModelConfig& c, std::mt19937_64& rng, const std::string& pid,
                                        const std::string& vid) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  preprocess::AlignedSample s;
  s.participant_id = pid;
  s.video_id = vid;
  auto fill = [&](FloatArray& a, std::vector<std::size_t> shape) {
    a.shape = std::move(shape);
    std::size_t n = 1;
    for (auto e : a.shape) n *= e;
    a.data.resize(n);
    for (auto& v : a.data) v = u(rng);
  };
  fill(s.frames, {c.steps, 3, c.frame_height, c.frame_width});
  fill(s.pupil_images, {c.steps, 2, c.pupil_size, c.pupil_size});
  fill(s.attention_maps, {c.steps, 1, c.frame_height, c.frame_width});
  for (auto& l : s.labels) l = static_cast<std::uint8_t>(rng() % 2);
  return s;
}

std::vector<preprocess::AlignedSample> random_samples(const ModelConfig& config, std::size_t participants,
                                                      std::size_t per_participant, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<preprocess::AlignedSample> out;
  for (std::size_t p = 0; p < participants; ++p) {
    for (std::size_t v = 0; v < per_participant; ++v) {
      out.push_back(random_sample(config, rng, "P" + std::to_string(p), "V" + std::to_string(v)));
    }
  }
  return out;
}

void write_sample_set(const std::filesystem::path& dir, const std::vector<preprocess::AlignedSample>& samples) {
  std::string index;
  for (const auto& s : samples) {
    const std::string name = s.participant_id + "__" + s.video_id;
    preprocess::save_sample(dir / "samples" / name, s);
    index += "samples/" + name + "\n";
  }
  write_text_file(dir / "samples.txt", index);
}

}  // namespace gazenet::testing
