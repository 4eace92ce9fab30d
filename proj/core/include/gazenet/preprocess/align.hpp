#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gazenet/manifest.hpp"
#include "gazenet/preprocess/attention.hpp"
#include "gazenet/preprocess/imaging.hpp"
#include "gazenet/preprocess/labels.hpp"
#include "gazenet/preprocess/pupil.hpp"

namespace gazenet::preprocess {

struct FrameConfig {
  std::size_t height = 90;
  std::size_t width = 160;
};

// Model-ready trial. All streams share `steps` (80 at 1 Hz).
struct AlignedSample {
  std::string participant_id;
  std::string video_id;
  FloatArray frames;          // T x 3 x H x W in [0, 1]
  FloatArray pupil_images;    // T x 2 x S x S (may be empty when not loaded)
  FloatArray attention_maps;  // T x 1 x H' x W' (may be empty when not loaded)
  Labels labels{};

  std::size_t steps() const { return frames.shape.empty() ? 0 : frames.shape[0]; }
};

// Index of the frame that represents second `t`: the middle frame of that
// second, clamped to the last available frame.
std::size_t representative_frame(std::size_t t, double fps, std::size_t available);

// Area-averaged resize of one H x W x 3 byte frame into 3 x h x w floats in [0, 1].
void resize_frame(const std::uint8_t* src, std::size_t src_h, std::size_t src_w, float* dst,
                  std::size_t dst_h, std::size_t dst_w);

AlignedSample align(const SequenceRecord& record, const Labels& labels,
                    const PupilImageSequence& pupil_images,
                    const AttentionMapSequence& attention_maps, const StimulusTiming& timing = {},
                    const FrameConfig& frame_config = {});

struct PreprocessConfig {
  PupilCleaningConfig pupil;
  PupilImagingConfig imaging;
  AttentionMapConfig attention;
  FrameConfig frames;
};

// Which streams a loader should read from disk.
struct StreamSelection {
  bool pupil = true;
  bool attention = true;
};

// Directory layout of one sample:
//   meta.txt  frames.arr  pupil_images.arr  attention_maps.arr
void save_sample(const std::filesystem::path& dir, const AlignedSample& sample);
AlignedSample load_sample(const std::filesystem::path& dir, StreamSelection streams = {});

struct PreprocessSummary {
  std::size_t written = 0;
  std::vector<std::string> rejected;  // "participant/video: reason"
};

// Runs the full pipeline over a manifest, writing <out>/samples/<pid>__<vid>/
// and an index file <out>/samples.txt. Trials failing pupil quality control
// are skipped and reported.
PreprocessSummary preprocess_dataset(const DatasetManifest& manifest,
                                     const std::filesystem::path& out_dir,
                                     const PreprocessConfig& config = {});

// Sample directories listed in <dir>/samples.txt, in order.
std::vector<std::filesystem::path> list_samples(const std::filesystem::path& dir);

}  // namespace gazenet::preprocess
