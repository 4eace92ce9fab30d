#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include "gazenet/kv.hpp"
#include "gazenet/model/model.hpp"

namespace gazenet {

inline constexpr int kCheckpointVersion = 1;

// Directory layout:
//   checkpoint.txt                 format, version, model.* config, extra keys
//   <group>.<param>.arr            one float32 array per parameter / buffer
//   modality.mean_pupil_image.arr  optional mean-fill statistics
//   modality.mean_attention_map.arr
void save_checkpoint(DualBranchModel<float>& model, const std::filesystem::path& dir,
                     const ModalityStats* stats = nullptr, const KeyValueDocument::Table& extra = {});

struct LoadedCheckpoint {
  std::unique_ptr<DualBranchModel<float>> model;
  std::optional<ModalityStats> stats;
  KeyValueDocument meta;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace gazenet
