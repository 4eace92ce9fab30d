#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <deque>
#include <filesystem>
#include <sstream>

#include "gazenet/error.hpp"
#include "gazenet/explain/saliency.hpp"
#include "gazenet/model/checkpoint.hpp"
#include "gazenet/preprocess/align.hpp"
#include "gazenet/synth.hpp"
#include "gazenet/train/experiment.hpp"

namespace gazenet::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kCompleteMarker = ".complete";

// Flat configuration: file values first, then flags that were given.
class Settings {
 public:
  void load(const std::string& path) {
    if (!path.empty()) doc_ = KeyValueDocument::load(path);
  }
  void apply_sets(const std::vector<std::string>& sets) {
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
      doc_.globals[s.substr(0, eq)] = s.substr(eq + 1);
    }
  }
  void set(const std::string& key, const std::string& value) { doc_.globals[key] = value; }
  bool has(const std::string& key) const { return doc_.globals.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const {
    return lookup(doc_.globals, key).value_or(fallback);
  }
  long long get_int(const std::string& key, long long fallback) const { return gazenet::get_int(doc_.globals, key, fallback); }
  double get_double(const std::string& key, double fallback) const {
    return gazenet::get_double(doc_.globals, key, fallback);
  }
  const KeyValueDocument& doc() const { return doc_; }

 private:
  KeyValueDocument doc_;
};

// Registers a flag that, when given, overrides `key`.
struct FlagBinding {
  CLI::Option* option;
  std::string key;
  std::string value;
};

class Bindings {
 public:
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto& b = items_.emplace_back();
    b.key = key;
    b.option = app->add_option(flag, b.value, help);
  }
  void apply(Settings& s) const {
    for (const auto& b : items_) {
      if (b.option->count() > 0) s.set(b.key, b.value);
    }
  }

 private:
  std::deque<FlagBinding> items_;
};

void guard_output(const fs::path& out, bool force) {
  if (fs::exists(out / kCompleteMarker)) {
    if (!force) throw ConfigError("output directory " + out.string() + " holds a completed run (use --force)");
    fs::remove(out / kCompleteMarker);
  }
  fs::create_directories(out);
}

void mark_complete(const fs::path& out) { write_text_file(out / kCompleteMarker, "ok\n"); }

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

void print_report(std::ostream& out, const AccuracyReport& r) {
  out << "mode: " << (r.mode.empty() ? "full" : r.mode) << "\n";
  out << "trials: " << r.trials << "\n\n";
  out << "Objective dimensions\n" << render_objective_table(r) << "\n";
  out << "Subjective dimensions\n" << render_subjective_table(r) << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "overall: %.3f\n", r.overall);
  out << buf;
}

// Model shape follows the data unless the configuration pins it.
void infer_model_shape(Settings& s, const preprocess::AlignedSample& sample) {
  if (!s.has("model.steps")) s.set("model.steps", std::to_string(sample.steps()));
  if (!s.has("model.frame_height")) s.set("model.frame_height", std::to_string(sample.frames.shape.at(2)));
  if (!s.has("model.frame_width")) s.set("model.frame_width", std::to_string(sample.frames.shape.at(3)));
  if (!s.has("model.pupil_size") && sample.pupil_images.shape.size() == 4) {
    s.set("model.pupil_size", std::to_string(sample.pupil_images.shape[2]));
  }
}

void add_training_flags(CLI::App* cmd, Bindings& b) {
  b.add(cmd, "--stage1-epochs", "train.stage1_epochs", "Stage-1 epoch cap");
  b.add(cmd, "--stage3-epochs", "train.stage3_epochs", "Stage-3 epoch cap");
  b.add(cmd, "--batch-size", "train.batch_size", "Trials per optimizer step");
  b.add(cmd, "--learning-rate", "train.learning_rate", "Adam step size");
  b.add(cmd, "--patience", "train.patience", "Early-stop patience in epochs");
  b.add(cmd, "--freeze-fraction", "train.freeze_fraction", "Share of transferred recurrent rows frozen in stage 3");
  b.add(cmd, "--target-train-accuracy", "train.target_train_accuracy", "Stop a stage once training accuracy reaches this");
  b.add(cmd, "--seed", "train.seed", "Training seed");
  b.add(cmd, "--split-seed", "split.seed", "Participant split seed");
}

std::function<void(const EpochRecord&)> epoch_logger(std::ostream& err) {
  return [&err](const EpochRecord& e) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s epoch %zu train_loss=%.5f val_loss=%.5f", e.stage.c_str(), e.epoch,
                  e.train_loss, e.val_loss);
    err << buf;
    if (e.train_accuracy == e.train_accuracy) err << " train_acc=" << e.train_accuracy;
    err << "\n";
  };
}

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::string stage = "cli";
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaze-guided video aesthetics pipeline", "gazenet"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> sets;
  bool force = false;
  app.add_option("--config", config_path, "Flat key=value configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", sets, "Override one configuration key (key=value); repeatable");
  app.add_flag("--force", force, "Overwrite a completed run");
  app.fallthrough();

  Bindings bindings;
  std::string out_dir, samples_dir, run_dir, manifest, mode = "full", variant = "grid", split_name = "test";
  std::string task = "naturalness", sample_id, layer = "spatial.video_taskconv";
  std::vector<std::string> report_inputs;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--out", out_dir, "Output directory")->required();
  bindings.add(synth, "--participants", "synth.participants", "Number of simulated observers");
  bindings.add(synth, "--videos", "synth.videos", "Number of distinct stimulus videos");
  bindings.add(synth, "--videos-per-participant", "synth.videos_per_participant", "Videos watched by each observer");
  bindings.add(synth, "--seed", "synth.seed", "Generator seed");
  bindings.add(synth, "--duration", "synth.duration_s", "Stimulus length in seconds");
  bindings.add(synth, "--width", "synth.width", "Rendered frame width");
  bindings.add(synth, "--height", "synth.height", "Rendered frame height");

  auto* prep = app.add_subcommand("preprocess", "Turn a manifest into model-ready samples");
  prep->add_option("--manifest", manifest, "Dataset manifest")->required();
  prep->add_option("--out", out_dir, "Output directory")->required();
  bindings.add(prep, "--frame-height", "preprocess.frame_height", "Frame and attention map height");
  bindings.add(prep, "--frame-width", "preprocess.frame_width", "Frame and attention map width");
  bindings.add(prep, "--pupil-size", "preprocess.pupil_size", "GAF/MTF image side");

  auto* train = app.add_subcommand("train", "Three-stage training and test evaluation");
  train->add_option("--samples", samples_dir, "Preprocessed samples directory")->required();
  train->add_option("--out", out_dir, "Experiment directory")->required();
  train->add_option("--variant", variant, "Modality variant: full, no_attention, no_pupil, neither");
  add_training_flags(train, bindings);

  auto* eval = app.add_subcommand("evaluate", "Evaluate a trained run");
  eval->add_option("--run", run_dir, "Experiment directory written by train")->required();
  eval->add_option("--samples", samples_dir, "Samples directory (default: the one used for training)");
  eval->add_option("--mode", mode, "full | video-only-zero | video-only-mean");
  eval->add_option("--split", split_name, "train | val | test");

  auto* ablate = app.add_subcommand("ablate", "Modality ablation grid");
  ablate->add_option("--samples", samples_dir, "Preprocessed samples directory")->required();
  ablate->add_option("--out", out_dir, "Output directory")->required();
  ablate->add_option("--variant", variant, "grid or one of full, no_attention, no_pupil, neither");
  add_training_flags(ablate, bindings);

  auto* expl = app.add_subcommand("explain", "Grad-CAM and temporal saliency for one sample");
  expl->add_option("--run", run_dir, "Experiment directory written by train")->required();
  expl->add_option("--samples", samples_dir, "Samples directory (default: the one used for training)");
  expl->add_option("--task", task, "Dimension name or id");
  expl->add_option("--sample", sample_id, "participant__video (default: first test sample)");
  expl->add_option("--layer", layer, "spatial.video_taskconv | temporal.video_taskconv");
  expl->add_option("--mode", mode, "Input mode for the explained pass");
  expl->add_option("--out", out_dir, "Output directory (default: <run>/explain/<sample>_<task>)");

  auto* report = app.add_subcommand("report", "Render tables and figures from earlier outputs");
  report->add_option("--inputs", report_inputs, "Run, ablation or explain directories")->required();
  report->add_option("--out", out_dir, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error stage=usage msg=\"" << one_line(e.what()) << "\"\n";
    return 2;
  }

  Context ctx{out, err};
  try {
    Settings settings;
    settings.load(config_path);
    settings.apply_sets(sets);
    bindings.apply(settings);

    auto sub = app.get_subcommands().front();
    ctx.stage = sub->get_name();

    if (sub == synth) {
      const fs::path dir = out_dir;
      guard_output(dir, force);
      synth::DatasetOptions opts;
      opts.videos_per_participant = static_cast<std::size_t>(settings.get_int("synth.videos_per_participant", 8));
      opts.render.timing.duration_s = settings.get_double("synth.duration_s", opts.render.timing.duration_s);
      opts.render.width = static_cast<std::size_t>(settings.get_int("synth.width", 160));
      opts.render.height = static_cast<std::size_t>(settings.get_int("synth.height", 90));
      const auto participants = static_cast<std::size_t>(settings.get_int("synth.participants", 20));
      const auto videos = static_cast<std::size_t>(settings.get_int("synth.videos", 8));
      const auto seed = static_cast<std::uint64_t>(settings.get_int("synth.seed", 1));
      const auto m = synth::gen_dataset(participants, videos, seed, dir, opts);
      out << "synth records=" << m.records.size() << " manifest=" << (dir / "manifest.txt").string() << "\n";
      mark_complete(dir);
    } else if (sub == prep) {
      const fs::path dir = out_dir;
      guard_output(dir, force);
      preprocess::PreprocessConfig pc;
      pc.frames.height = static_cast<std::size_t>(settings.get_int("preprocess.frame_height", 90));
      pc.frames.width = static_cast<std::size_t>(settings.get_int("preprocess.frame_width", 160));
      pc.attention.map_height = pc.frames.height;
      pc.attention.map_width = pc.frames.width;
      pc.imaging.image_size = static_cast<std::size_t>(settings.get_int("preprocess.pupil_size", 32));
      const auto m = load_manifest(manifest);
      const auto summary = preprocess::preprocess_dataset(m, dir, pc);
      out << "preprocess written=" << summary.written << " rejected=" << summary.rejected.size() << "\n";
      for (const auto& r : summary.rejected) out << "rejected " << r << "\n";
      mark_complete(dir);
    } else if (sub == train || sub == ablate) {
      const fs::path dir = out_dir;
      guard_output(dir, force);
      std::vector<AblationVariant> variants;
      if (variant == "grid" && sub == ablate) {
        variants.assign(std::begin(kAblationVariants), std::end(kAblationVariants));
      } else {
        variants.push_back(parse_ablation_variant(variant == "grid" ? "full" : variant));
      }
      std::vector<AblationRow> rows;
      for (auto v : variants) {
        const auto mask = mask_for(v);
        auto s = settings;
        const auto split_ratios = SplitRatios{s.get_double("split.train", 0.70), s.get_double("split.val", 0.15),
                                              s.get_double("split.test", 0.15)};
        const auto split_seed = static_cast<std::uint64_t>(s.get_int("split.seed", 1));
        const auto data = load_dataset(samples_dir, split_ratios, split_seed, {mask.pupil, mask.attention});
        infer_model_shape(s, data.samples.front());
        auto config = ExperimentConfig::read(s.doc());
        config.train.on_epoch = epoch_logger(err);
        const fs::path run = sub == ablate ? dir / to_string(v) : dir;
        DualBranchModel<float> model(config.model);
        const auto result = run_experiment(model, data, config, mask, run);
        {
          auto doc = KeyValueDocument::load(run / "config.txt");
          doc.globals["data.samples"] = fs::absolute(samples_dir).string();
          doc.globals["variant"] = to_string(v);
          write_text_file(run / "config.txt", doc.serialize());
        }
        rows.push_back({v, result.test});
        if (sub == train) {
          print_report(out, result.test);
          if (result.test_video_only) {
            out << "\n";
            print_report(out, *result.test_video_only);
          }
        }
        mark_complete(run);
      }
      if (sub == ablate) {
        const auto text = render_ablation_table(rows);
        for (const auto& r : rows) write_text_file(dir / ("ablation_" + to_string(r.variant) + ".txt"), r.report.serialize());
        write_text_file(dir / "ablation.txt", text);
        out << text;
        mark_complete(dir);
      }
    } else if (sub == eval || sub == expl) {
      const fs::path run = run_dir;
      const auto cfg = KeyValueDocument::load(run / "config.txt");
      const auto experiment = ExperimentConfig::read(cfg);
      const ModalityMask mask{lookup(cfg.globals, "mask.pupil").value_or("1") == "1",
                              lookup(cfg.globals, "mask.attention").value_or("1") == "1"};
      if (samples_dir.empty()) samples_dir = require_string(cfg.globals, "data.samples");
      const auto inference = parse_inference_mode(mode);
      const bool gaze = inference == InferenceMode::kFullMultimodal;
      const auto data = load_dataset(samples_dir, experiment.split, experiment.split_seed,
                                     {gaze && mask.pupil, gaze && mask.attention});
      auto ckpt = load_checkpoint(run / "checkpoints" / "final");
      const ModalityStats* stats = ckpt.stats ? &*ckpt.stats : nullptr;
      if (sub == eval) {
        Split which = Split::kTest;
        if (split_name == "train") which = Split::kTrain;
        else if (split_name == "val") which = Split::kVal;
        else if (split_name != "test") throw ConfigError("unknown split '" + split_name + "'");
        const auto trials = data.members(which);
        auto r = evaluate(*ckpt.model, trials, inference, stats, 0.5, mask, experiment.train.batch_size);
        print_report(out, r);
        const std::string suffix = split_name == "test" ? "" : "_" + split_name;
        write_text_file(run / ("report_" + to_string(inference) + suffix + ".txt"), r.serialize());
      } else {
        std::size_t task_id = 0;
        if (!task.empty() && std::isdigit(static_cast<unsigned char>(task[0]))) {
          task_id = static_cast<std::size_t>(parse_int(task, "--task"));
          require_active(static_cast<int>(task_id));
        } else {
          task_id = static_cast<std::size_t>(active_dimension_by_name(task).id);
        }
        const preprocess::AlignedSample* sample = nullptr;
        for (const auto& s : data.samples) {
          if (sample_id.empty() ? data.split.of(s.participant_id) == Split::kTest
                                : s.participant_id + "__" + s.video_id == sample_id) {
            sample = &s;
            break;
          }
        }
        if (sample == nullptr) throw ValidationError("sample '" + sample_id + "' not found");
        const auto cam_layer = explain::parse_cam_layer(layer);
        const auto result = explain::explain_sample(*ckpt.model, *sample, task_id, cam_layer, inference, stats);
        const fs::path dest = out_dir.empty() ? run / "explain" /
                                                    (sample->participant_id + "__" + sample->video_id + "_" +
                                                     std::string(dimension(static_cast<int>(task_id)).name))
                                              : fs::path(out_dir);
        guard_output(dest, force);
        explain::save_saliency(dest, result, *sample);
        const std::size_t T = result.spatial.shape[0];
        for (std::size_t t : {std::size_t{0}, T / 4, T / 2, (3 * T) / 4, T - 1}) {
          explain::write_ppm(dest / ("overlay_t" + std::to_string(t) + ".ppm"),
                             explain::render_overlay(sample->frames, result.spatial, t));
        }
        explain::write_ppm(dest / "temporal.ppm", explain::render_temporal_plot(result.temporal));
        out << "explain task=" << dimension(static_cast<int>(task_id)).name << " sample=" << sample->participant_id
            << "__" << sample->video_id << " out=" << dest.string() << "\n";
        mark_complete(dest);
      }
    } else if (sub == report) {
      const fs::path dir = out_dir;
      guard_output(dir, force);
      std::ostringstream text;
      std::size_t figures = 0;
      for (const auto& input : report_inputs) {
        const fs::path in = input;
        if (!fs::is_directory(in)) throw LoadError("report input is not a directory: " + in.string());
        std::vector<fs::path> reports, saliency;
        for (const auto& e : fs::recursive_directory_iterator(in)) {
          const auto name = e.path().filename().string();
          if (name.rfind("report_", 0) == 0 && e.path().extension() == ".txt") reports.push_back(e.path());
          if (name == "meta.txt" && fs::exists(e.path().parent_path() / "spatial.arr")) saliency.push_back(e.path().parent_path());
        }
        std::sort(reports.begin(), reports.end());
        std::sort(saliency.begin(), saliency.end());
        for (const auto& r : reports) {
          text << "== " << fs::relative(r, in.parent_path()).string() << "\n";
          std::ostringstream block;
          print_report(block, AccuracyReport::read(KeyValueDocument::load(r)));
          text << block.str() << "\n";
        }
        std::vector<AblationRow> rows;
        for (auto v : kAblationVariants) {
          const auto p = in / ("ablation_" + to_string(v) + ".txt");
          if (fs::exists(p)) rows.push_back({v, AccuracyReport::read(KeyValueDocument::load(p))});
        }
        if (!rows.empty()) text << "== ablation " << in.filename().string() << "\n" << render_ablation_table(rows) << "\n";
        for (const auto& s : saliency) {
          const auto saved = explain::load_saliency(s);
          const std::string stem = saved.participant_id + "__" + saved.video_id + "_" +
                                   std::string(dimension(static_cast<int>(saved.result.task_id)).name);
          const std::size_t T = saved.result.spatial.shape[0];
          for (std::size_t t : {std::size_t{0}, T / 2, T - 1}) {
            explain::write_ppm(dir / "figures" / (stem + "_t" + std::to_string(t) + ".ppm"),
                               explain::render_overlay(saved.frames, saved.result.spatial, t));
            ++figures;
          }
          explain::write_ppm(dir / "figures" / (stem + "_temporal.ppm"), explain::render_temporal_plot(saved.result.temporal));
          ++figures;
          text << "== saliency " << stem << " layer=" << saved.result.layer_name << "\n";
        }
      }
      write_text_file(dir / "report.txt", text.str());
      out << text.str() << "figures: " << figures << "\n";
      mark_complete(dir);
    }
    return 0;
  } catch (const Error& e) {
    err << "error stage=" << ctx.stage << " kind=" << e.kind() << " msg=\"" << one_line(e.what()) << "\"\n";
  } catch (const std::exception& e) {
    err << "error stage=" << ctx.stage << " kind=internal msg=\"" << one_line(e.what()) << "\"\n";
  }
  return 1;
}

}  // namespace gazenet::cli
