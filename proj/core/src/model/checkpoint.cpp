#include "gazenet/model/checkpoint.hpp"

#include "gazenet/array_io.hpp"
#include "gazenet/error.hpp"

namespace gazenet {
namespace {

constexpr const char* kFormat = "gazenet-checkpoint";

template <typename V>
FloatArray to_array(const V& values, std::vector<std::size_t> shape) {
  FloatArray a;
  a.shape = std::move(shape);
  a.data.assign(values.begin(), values.end());
  return a;
}

}  // namespace

void save_checkpoint(DualBranchModel<float>& model, const std::filesystem::path& dir, const ModalityStats* stats,
                     const KeyValueDocument::Table& extra) {
  std::filesystem::create_directories(dir);
  KeyValueDocument meta;
  meta.globals = extra;
  meta.globals["format"] = kFormat;
  meta.globals["version"] = std::to_string(kCheckpointVersion);
  model.config().write(meta);
  meta.globals["modality_stats"] = stats ? "1" : "0";
  std::size_t tensors = 0;
  for (auto& g : model.groups()) {
    for (auto& p : g.params) {
      write_array(dir / (g.name + "." + p.name + ".arr"), to_array(p.param->value, p.param->shape));
      ++tensors;
    }
    for (auto& b : g.buffers) {
      write_array(dir / (g.name + "." + b.name + ".arr"), to_array(*b.values, {b.values->size()}));
      ++tensors;
    }
  }
  meta.globals["tensors"] = std::to_string(tensors);
  if (stats) {
    write_array(dir / "modality.mean_pupil_image.arr", stats->mean_pupil_image);
    write_array(dir / "modality.mean_attention_map.arr", stats->mean_attention_map);
  }
  write_text_file(dir / "checkpoint.txt", meta.serialize());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto meta_path = dir / "checkpoint.txt";
  if (!std::filesystem::exists(meta_path)) throw LoadError("no checkpoint at " + dir.string());
  LoadedCheckpoint out;
  out.meta = KeyValueDocument::load(meta_path);
  if (lookup(out.meta.globals, "format") != std::optional<std::string>(kFormat)) {
    throw FormatError(meta_path.string() + ": not a checkpoint");
  }
  const auto version = require_int(out.meta.globals, "version");
  if (version != kCheckpointVersion) {
    throw FormatError(meta_path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  out.model = std::make_unique<DualBranchModel<float>>(ModelConfig::read(out.meta));
  for (auto& g : out.model->groups()) {
    for (auto& p : g.params) {
      const auto path = dir / (g.name + "." + p.name + ".arr");
      if (!std::filesystem::exists(path)) throw LoadError("checkpoint tensor missing: " + path.string());
      {
        const auto a = read_float_array(path, p.param->shape);
        p.param->value.assign(a.data.begin(), a.data.end());
      }
    }
    for (auto& b : g.buffers) {
      const auto path = dir / (g.name + "." + b.name + ".arr");
      if (!std::filesystem::exists(path)) throw LoadError("checkpoint tensor missing: " + path.string());
      const std::size_t shape[1] = {b.values->size()};
      {
        const auto a = read_float_array(path, shape);
        b.values->assign(a.data.begin(), a.data.end());
      }
    }
  }
  if (require_string(out.meta.globals, "modality_stats") == "1") {
    ModalityStats s;
    s.mean_pupil_image = read_float_array(dir / "modality.mean_pupil_image.arr");
    s.mean_attention_map = read_float_array(dir / "modality.mean_attention_map.arr");
    out.stats = std::move(s);
  }
  return out;
}

}  // namespace gazenet
