#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gazenet/model/config.hpp"
#include "gazenet/nn/layers.hpp"
#include "gazenet/preprocess/align.hpp"

namespace gazenet {

using nn::Matrix;
using nn::Tensor4;

// One batch of aligned trials. Image index i = t * batch + b, matching the
// LSTM column layout.
template <typename T>
struct ModelInput {
  std::size_t batch = 0;
  std::size_t steps = 0;
  Tensor4<T> frames;     // N x 3 x H x W
  Tensor4<T> pupil;      // N x 2 x S x S
  Tensor4<T> attention;  // N x 1 x H x W
};

// Builds a batch, substituting gaze streams according to `mode` and `mask`.
// Streams that are substituted are never read from the samples.
template <typename T>
ModelInput<T> assemble_input(const ModelConfig& config,
                             const std::vector<const preprocess::AlignedSample*>& samples,
                             InferenceMode mode = InferenceMode::kFullMultimodal,
                             const ModalityStats* stats = nullptr, ModalityMask mask = {});

// Mean pupil image and attention map over every timestep of every sample.
ModalityStats compute_modality_stats(const std::vector<const preprocess::AlignedSample*>& samples);

template <typename T>
struct NamedParam {
  std::string name;  // qualified inside its group, e.g. "block0.conv.weight"
  nn::Param<T>* param;
};

template <typename T>
struct NamedBuffer {
  std::string name;
  nn::AlignedVector<T>* values;
};

template <typename T>
struct ParamGroup {
  std::string name;
  std::vector<NamedParam<T>> params;
  std::vector<NamedBuffer<T>> buffers;
  std::function<void(nn::Rng&)> initialize;
  std::size_t size() const;
};

// Temporary per-task heads that read only the temporal branch (first stage).
template <typename T>
struct TemporalHeads {
  std::vector<nn::Head<T>> heads;
  TemporalHeads() = default;
  explicit TemporalHeads(const ModelConfig& config);
  void init(std::uint64_t seed);
  ParamGroup<T> group();
};

enum class Phase { kTemporalOnly, kJoint };

// Gradient taps for interpretability.
template <typename T>
struct Probe {
  std::size_t task = 0;
  // Task conv activations (post-ReLU) and dlogit/dactivation.
  Tensor4<T> temporal_activation, temporal_activation_grad;
  Tensor4<T> spatial_activation, spatial_activation_grad;
  // dlogit / d(LSTM input) per branch, features x (steps * batch).
  Matrix<T> temporal_input_grad, spatial_input_grad;
  // Hidden sequences (H x steps*batch): temporal shared LSTM top layer and
  // spatial task LSTM.
  Matrix<T> temporal_states, spatial_states;
};

// Per-branch hidden sequences for one task (H x steps*batch).
template <typename T>
struct BranchStates {
  Matrix<T> temporal;
  Matrix<T> spatial;
};

template <typename T>
class DualBranchModel {
 public:
  explicit DualBranchModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  // Every group gets its own stream derived from (seed, group name).
  void init(std::uint64_t seed);
  void init_group(const std::string& name, std::uint64_t seed);

  std::vector<ParamGroup<T>> groups();
  ParamGroup<T> group(const std::string& name);
  std::size_t parameter_count();
  void zero_grad();

  struct RunOptions {
    bool training = false;
    Phase phase = Phase::kJoint;
    std::vector<std::size_t> tasks;  // empty: all tasks
    TemporalHeads<T>* temporal_heads = nullptr;  // required for kTemporalOnly
    bool backbone_backward = true;
  };
  // Called with the 1 x batch logits of a task; return dL/dlogit (same
  // shape) to backpropagate, or an empty matrix to skip.
  using LogitGrad = std::function<Matrix<T>(std::size_t task, const Matrix<T>& logits)>;

  // Forward (and optionally backward) pass. Returns n_tasks x batch logits;
  // rows of tasks not run are zero.
  Matrix<T> run(const ModelInput<T>& input, const RunOptions& options, const LogitGrad& grad = {},
                Probe<T>* probe = nullptr);

  // Evaluation-mode probabilities, n_tasks x batch.
  Matrix<T> predict(const ModelInput<T>& input);

  // Evaluation-mode hidden sequences of both branches for one task.
  BranchStates<T> branch_states(const ModelInput<T>& input, std::size_t task);

  struct Temporal {
    nn::ConvStack<T> video_backbone;
    std::vector<nn::TaskConv<T>> video_taskconv;
    nn::ConvStack<T> pupil_encoder;
    std::vector<nn::TaskConv<T>> pupil_taskconv;
    nn::LstmStack<T> shared_lstm;
  } temporal;

  struct Spatial {
    nn::ConvStack<T> video_backbone;
    std::vector<nn::TaskConv<T>> video_taskconv;
    nn::ConvStack<T> attn_backbone;
    nn::Mmtm<T> mmtm;
    nn::LstmStack<T> shared_lstm;
    std::vector<nn::Lstm<T>> task_lstm;
  } spatial;

  std::vector<nn::Head<T>> heads;

 private:
  void check_input(const ModelInput<T>& input) const;

  ModelConfig config_;
};

// Seed for a named group.
std::uint64_t group_seed(std::uint64_t seed, const std::string& group);

}  // namespace gazenet
