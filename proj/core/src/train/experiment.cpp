#include "gazenet/train/experiment.hpp"

#include <cstdio>
#include <sstream>

#include "gazenet/error.hpp"
#include "gazenet/model/checkpoint.hpp"

namespace gazenet {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string title_case(std::string_view name) {
  std::string out;
  bool up = true;
  for (char c : name) {
    if (c == '_') {
      out += ' ';
      up = true;
    } else {
      out += up ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c;
      up = false;
    }
  }
  return out;
}

std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      out << (c ? " | " : "") << cells[c] << std::string(width[c] - cells[c].size(), ' ');
    }
    out << "\n";
  };
  line(header);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "-|-" : "") << std::string(width[c], '-');
  out << "\n";
  for (const auto& r : rows) line(r);
  return out.str();
}

std::string fixed3(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

void ExperimentConfig::write(KeyValueDocument& doc) const {
  model.write(doc);
  train.write(doc);
  doc.globals["split.train"] = num(split.train);
  doc.globals["split.val"] = num(split.val);
  doc.globals["split.test"] = num(split.test);
  doc.globals["split.seed"] = std::to_string(split_seed);
}

ExperimentConfig ExperimentConfig::read(const KeyValueDocument& doc) {
  ExperimentConfig c;
  c.model = ModelConfig::read(doc);
  c.train = TrainConfig::read(doc);
  c.split.train = get_double(doc.globals, "split.train", c.split.train);
  c.split.val = get_double(doc.globals, "split.val", c.split.val);
  c.split.test = get_double(doc.globals, "split.test", c.split.test);
  c.split_seed = static_cast<std::uint64_t>(get_int(doc.globals, "split.seed", static_cast<long long>(c.split_seed)));
  return c;
}

std::vector<const preprocess::AlignedSample*> Dataset::members(Split which) const {
  std::vector<const preprocess::AlignedSample*> out;
  for (const auto& s : samples) {
    if (split.of(s.participant_id) == which) out.push_back(&s);
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& samples_dir, const SplitRatios& ratios, std::uint64_t split_seed,
                     preprocess::StreamSelection streams) {
  Dataset d;
  std::vector<std::string> participants;
  for (const auto& dir : preprocess::list_samples(samples_dir)) {
    d.samples.push_back(preprocess::load_sample(dir, streams));
    participants.push_back(d.samples.back().participant_id);
  }
  if (d.samples.empty()) throw LoadError("no samples listed in " + samples_dir.string());
  d.split = split_participants(participants, ratios, split_seed);
  return d;
}

ExperimentResult run_experiment(DualBranchModel<float>& model, const Dataset& data, const ExperimentConfig& config,
                                ModalityMask mask, const std::optional<std::filesystem::path>& out_dir) {
  config.train.validate();
  if (!(model.config() == config.model)) throw ConfigError("model does not match the experiment config");
  TrainData td{data.members(Split::kTrain), data.members(Split::kVal), mask};
  const auto test = data.members(Split::kTest);
  if (td.train.empty() || test.empty()) throw ValidationError("train and test splits must be nonempty");

  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    KeyValueDocument doc;
    config.write(doc);
    doc.globals["mask.pupil"] = mask.pupil ? "1" : "0";
    doc.globals["mask.attention"] = mask.attention ? "1" : "0";
    write_text_file(*out_dir / "config.txt", doc.serialize());
    KeyValueDocument seeds;
    seeds.globals["train.seed"] = std::to_string(config.train.seed);
    seeds.globals["split.seed"] = std::to_string(config.split_seed);
    seeds.globals["init.seed"] = std::to_string(config.train.seed);
    seeds.globals["transfer.seed"] = std::to_string(config.train.seed);
    if (config.train.freeze_mask_seed) seeds.globals["freeze_mask.seed"] = std::to_string(*config.train.freeze_mask_seed);
    write_text_file(*out_dir / "seeds.txt", seeds.serialize());
    KeyValueDocument split;
    for (const auto& [pid, s] : data.split.participants) split.globals[pid] = std::string(to_string(s));
    write_text_file(*out_dir / "split.txt", split.serialize());
  }

  ExperimentResult result;
  if (mask.pupil && mask.attention) result.stats = compute_modality_stats(td.train);
  const ModalityStats* stats = result.stats ? &*result.stats : nullptr;
  KeyValueDocument::Table extra{{"mask.pupil", mask.pupil ? "1" : "0"}, {"mask.attention", mask.attention ? "1" : "0"}};

  model.init(config.train.seed);
  TemporalHeads<float> heads(model.config());
  heads.init(config.train.seed);
  auto& tr = result.training;
  tr.stage1 = stage1_pretrain(model, heads, td, config.train, tr.history);
  if (out_dir) save_checkpoint(model, *out_dir / "checkpoints" / "stage1", stats, extra);
  tr.freeze_mask = stage2_transfer(model, config.train);
  tr.stage3 = stage3_joint_finetune(model, tr.freeze_mask, td, config.train, tr.history);
  if (out_dir) save_checkpoint(model, *out_dir / "checkpoints" / "final", stats, extra);

  result.test = evaluate(model, test, InferenceMode::kFullMultimodal, nullptr, 0.5, mask, config.train.batch_size);
  if (stats) {
    result.test_video_only =
        evaluate(model, test, InferenceMode::kVideoOnlyMeanFill, stats, 0.5, mask, config.train.batch_size);
  }
  if (out_dir) {
    write_text_file(*out_dir / "history.csv", tr.history.to_csv());
    write_text_file(*out_dir / "report_full.txt", result.test.serialize());
    if (result.test_video_only) write_text_file(*out_dir / "report_video-only-mean.txt", result.test_video_only->serialize());
  }
  return result;
}

ModalityMask mask_for(AblationVariant v) {
  switch (v) {
    case AblationVariant::kFull: return {true, true};
    case AblationVariant::kNoAttention: return {true, false};
    case AblationVariant::kNoPupil: return {false, true};
    case AblationVariant::kNeither: return {false, false};
  }
  return {};
}

std::string to_string(AblationVariant v) {
  switch (v) {
    case AblationVariant::kFull: return "full";
    case AblationVariant::kNoAttention: return "no_attention";
    case AblationVariant::kNoPupil: return "no_pupil";
    case AblationVariant::kNeither: return "neither";
  }
  return "?";
}

AblationVariant parse_ablation_variant(const std::string& text) {
  for (auto v : kAblationVariants) {
    if (to_string(v) == text) return v;
  }
  throw ConfigError("unknown ablation variant '" + text + "' (expected full, no_attention, no_pupil, neither)");
}

std::string row_label(AblationVariant v) {
  switch (v) {
    case AblationVariant::kFull: return "Full model";
    case AblationVariant::kNoAttention: return "w/o visual attention";
    case AblationVariant::kNoPupil: return "w/o pupil";
    case AblationVariant::kNeither: return "w/o visual attention & pupil";
  }
  return "?";
}

AccuracyReport run_ablation(const ExperimentConfig& config, AblationVariant variant,
                            const std::filesystem::path& samples_dir, const std::optional<std::filesystem::path>& out_dir) {
  const auto mask = mask_for(variant);
  const auto data = load_dataset(samples_dir, config.split, config.split_seed, {mask.pupil, mask.attention});
  DualBranchModel<float> model(config.model);
  auto result = run_experiment(model, data, config, mask, out_dir);
  result.test.mode = "ablation:" + to_string(variant);
  return result.test;
}

std::string render_objective_table(const AccuracyReport& r) {
  std::vector<std::string> header{"Method", "Overall"};
  std::vector<std::string> row{"Ours", fixed3(r.objective)};
  for (const auto& d : dimensions_in(Category::kObjective)) {
    if (static_cast<std::size_t>(d) >= r.per_dimension.size()) continue;
    header.push_back(title_case(dimension(d).name));
    row.push_back(fixed3(r.per_dimension[static_cast<std::size_t>(d)]));
  }
  return table(header, {row});
}

std::string render_subjective_table(const AccuracyReport& r) {
  std::vector<std::string> header{"Method", "Overall"};
  std::vector<std::string> row{"Ours", fixed3(r.subjective)};
  for (const auto& d : dimensions_in(Category::kSubjective)) {
    if (static_cast<std::size_t>(d) >= r.per_dimension.size()) continue;
    header.push_back(title_case(dimension(d).name));
    row.push_back(fixed3(r.per_dimension[static_cast<std::size_t>(d)]));
  }
  return table(header, {row});
}

std::string render_ablation_table(const std::vector<AblationRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) cells.push_back({row_label(r.variant), fixed3(r.report.objective), fixed3(r.report.subjective)});
  return table({"Method", "Objective accuracy", "Subjective accuracy"}, cells);
}

}  // namespace gazenet
