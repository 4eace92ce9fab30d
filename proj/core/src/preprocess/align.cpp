#include "gazenet/preprocess/align.hpp"

#include <cmath>
#include <sstream>

#include "gazenet/error.hpp"
#include "gazenet/kv.hpp"

namespace gazenet::preprocess {

std::size_t representative_frame(std::size_t t, double fps, std::size_t available) {
  const auto per_second = static_cast<std::size_t>(std::llround(fps));
  const std::size_t index = per_second * t + per_second / 2;
  return std::min(index, available - 1);
}

void resize_frame(const std::uint8_t* src, std::size_t src_h, std::size_t src_w, float* dst,
                  std::size_t dst_h, std::size_t dst_w) {
  const auto wy = area_weights(src_h, dst_h);
  const auto wx = area_weights(src_w, dst_w);
  const std::size_t plane = dst_h * dst_w;
  for (std::size_t r = 0; r < dst_h; ++r) {
    const auto& ry = wy.rows[r];
    for (std::size_t c = 0; c < dst_w; ++c) {
      const auto& rx = wx.rows[c];
      double acc[3] = {0, 0, 0};
      for (std::size_t a = 0; a < ry.w.size(); ++a) {
        const std::uint8_t* row = src + (ry.first + a) * src_w * 3;
        for (std::size_t b = 0; b < rx.w.size(); ++b) {
          const double w = ry.w[a] * rx.w[b];
          const std::uint8_t* px = row + (rx.first + b) * 3;
          acc[0] += w * px[0];
          acc[1] += w * px[1];
          acc[2] += w * px[2];
        }
      }
      for (int ch = 0; ch < 3; ++ch) {
        dst[static_cast<std::size_t>(ch) * plane + r * dst_w + c] = static_cast<float>(acc[ch] / 255.0);
      }
    }
  }
}

AlignedSample align(const SequenceRecord& record, const Labels& labels,
                    const PupilImageSequence& pupil_images,
                    const AttentionMapSequence& attention_maps, const StimulusTiming& timing,
                    const FrameConfig& fc) {
  const std::size_t steps = timing.windows();
  const std::string who = "(" + record.participant_id + ", " + record.video_id + ")";
  if (pupil_images.steps() != steps) {
    throw AlignmentError(who + ": pupil images cover " + std::to_string(pupil_images.steps()) +
                         " windows, expected " + std::to_string(steps));
  }
  if (attention_maps.maps.shape.empty() || attention_maps.maps.shape[0] != steps) {
    throw AlignmentError(who + ": attention maps do not cover " + std::to_string(steps) +
                         " windows");
  }
  if (record.frames.rank() != 4 || record.frames.shape[3] != 3) {
    throw AlignmentError(who + ": frame stack must be T x H x W x 3");
  }
  const std::size_t available = record.frames.shape[0];
  // The tail clamp tolerates a few dropped frames, not a missing second.
  const auto per_second = static_cast<std::size_t>(std::llround(timing.video_fps));
  if (available + per_second / 2 < timing.nominal_frames() || available == 0) {
    throw AlignmentError(who + ": video has " + std::to_string(available) + " frames, expected " +
                         std::to_string(timing.nominal_frames()));
  }
  const std::size_t h = record.frames.shape[1];
  const std::size_t w = record.frames.shape[2];

  AlignedSample out;
  out.participant_id = record.participant_id;
  out.video_id = record.video_id;
  out.labels = labels;
  out.pupil_images = pupil_images.images;
  out.attention_maps = attention_maps.maps;
  out.frames = FloatArray({steps, 3, fc.height, fc.width});
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t idx = representative_frame(t, timing.video_fps, available);
    resize_frame(record.frames.data.data() + idx * h * w * 3, h, w,
                 out.frames.data.data() + t * 3 * fc.height * fc.width, fc.height, fc.width);
  }
  return out;
}

void save_sample(const std::filesystem::path& dir, const AlignedSample& s) {
  std::filesystem::create_directories(dir);
  KeyValueDocument meta;
  meta.globals["participant_id"] = s.participant_id;
  meta.globals["video_id"] = s.video_id;
  std::string labels;
  for (auto l : s.labels) labels += l ? '1' : '0';
  meta.globals["labels"] = labels;
  meta.globals["steps"] = std::to_string(s.steps());
  write_text_file(dir / "meta.txt", meta.serialize());
  write_array(dir / "frames.arr", s.frames);
  write_array(dir / "pupil_images.arr", s.pupil_images);
  write_array(dir / "attention_maps.arr", s.attention_maps);
}

AlignedSample load_sample(const std::filesystem::path& dir, StreamSelection streams) {
  const auto meta = KeyValueDocument::load(dir / "meta.txt");
  AlignedSample s;
  s.participant_id = require_string(meta.globals, "participant_id");
  s.video_id = require_string(meta.globals, "video_id");
  const std::string labels = require_string(meta.globals, "labels");
  if (labels.size() != kNumTasks || labels.find_first_not_of("01") != std::string::npos) {
    throw FormatError((dir / "meta.txt").string() + ": labels must be 15 binary digits");
  }
  for (std::size_t d = 0; d < kNumTasks; ++d) s.labels[d] = labels[d] == '1';
  s.frames = read_float_array(dir / "frames.arr");
  if (streams.pupil) s.pupil_images = read_float_array(dir / "pupil_images.arr");
  if (streams.attention) s.attention_maps = read_float_array(dir / "attention_maps.arr");
  const std::size_t steps = s.steps();
  if ((streams.pupil && s.pupil_images.shape.at(0) != steps) ||
      (streams.attention && s.attention_maps.shape.at(0) != steps)) {
    throw AlignmentError(dir.string() + ": stream lengths disagree");
  }
  return s;
}

PreprocessSummary preprocess_dataset(const DatasetManifest& manifest,
                                     const std::filesystem::path& out_dir,
                                     const PreprocessConfig& config) {
  std::vector<TrialRatings> ratings;
  for (const auto& r : manifest.records) ratings.push_back({r.participant_id, r.video_id, r.ratings});
  const auto table = normalize_and_binarize(ratings);
  const double sigma = sigma_pixels(manifest.geometry);

  std::filesystem::create_directories(out_dir / "samples");
  PreprocessSummary summary;
  std::ostringstream index;
  for (const auto& ref : manifest.records) {
    const auto record = load_record(manifest, ref);
    CleanPupilTrace trace;
    try {
      trace = clean_pupil(record.gaze, manifest.timing, config.pupil);
    } catch (const QualityError& e) {
      summary.rejected.push_back(ref.participant_id + "/" + ref.video_id + ": " + e.what());
      continue;
    }
    const auto images = pupil_image_sequence(trace, config.imaging);
    const auto maps =
        attention_maps(record.gaze, sigma, manifest.geometry, manifest.timing, config.attention);
    const auto sample = align(record, table.at(ref.participant_id, ref.video_id).labels, images,
                              maps, manifest.timing, config.frames);
    const std::string name = ref.participant_id + "__" + ref.video_id;
    save_sample(out_dir / "samples" / name, sample);
    index << "samples/" << name << '\n';
    ++summary.written;
  }
  write_text_file(out_dir / "samples.txt", index.str());
  return summary;
}

std::vector<std::filesystem::path> list_samples(const std::filesystem::path& dir) {
  std::istringstream in(read_text_file(dir / "samples.txt"));
  std::vector<std::filesystem::path> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(dir / line);
  }
  return out;
}

}  // namespace gazenet::preprocess
