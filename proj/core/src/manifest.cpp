#include "gazenet/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gazenet/dimensions.hpp"
#include "gazenet/error.hpp"
#include "gazenet/gaze_io.hpp"
#include "gazenet/kv.hpp"

namespace gazenet {
namespace {

constexpr std::string_view kRatingPrefix = "rating.";

std::string record_label(const RecordRef& r) {
  return "record (" + r.participant_id + ", " + r.video_id + ")";
}

RecordRef parse_record(const KeyValueDocument::Section& section, const std::string& origin) {
  const std::string where = origin + ":" + std::to_string(section.line);
  RecordRef ref;
  try {
    ref.participant_id = require_string(section.values, "participant_id");
    ref.video_id = require_string(section.values, "video_id");
    ref.frames = require_string(section.values, "frames");
    ref.gaze = require_string(section.values, "gaze");
  } catch (const ConfigError& e) {
    throw ValidationError(where + ": " + e.what());
  }
  if (auto gt = lookup(section.values, "ground_truth")) ref.ground_truth = *gt;
  for (const auto& [key, value] : section.values) {
    if (key.rfind(kRatingPrefix, 0) != 0) continue;
    const std::string name = key.substr(kRatingPrefix.size());
    const DimensionSpec* spec = nullptr;
    for (const auto& d : dimension_registry()) {
      if (d.name == name) spec = &d;
    }
    if (spec == nullptr) {
      throw ValidationError(where + ": " + record_label(ref) + " rates unknown dimension '" +
                            name + "'");
    }
    if (spec->excluded) continue;
    ref.ratings[spec->id] = static_cast<int>(parse_int(value, where + " " + key));
  }
  return ref;
}

}  // namespace

void ScreenGeometry::validate() const {
  if (!(width_px > 0 && height_px > 0 && diagonal_inches > 0 && viewing_distance_cm >= 0)) {
    throw ValidationError("screen geometry fields must be positive");
  }
}

std::size_t StimulusTiming::nominal_frames() const {
  return static_cast<std::size_t>(std::llround(duration_s * video_fps));
}
std::size_t StimulusTiming::nominal_samples() const {
  return static_cast<std::size_t>(std::llround(duration_s * gaze_hz));
}
std::size_t StimulusTiming::windows() const {
  return static_cast<std::size_t>(std::llround(duration_s));
}
void StimulusTiming::validate() const {
  if (!(duration_s >= 1 && video_fps > 0 && gaze_hz > 0)) {
    throw ValidationError("stimulus timing fields must be positive (duration >= 1 s)");
  }
}

std::vector<std::string> DatasetManifest::participants() const {
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.participant_id);
  return {ids.begin(), ids.end()};
}

void DatasetManifest::validate() const {
  if (schema_version != kManifestSchemaVersion) {
    throw ValidationError("unsupported manifest schema_version '" + schema_version + "'");
  }
  geometry.validate();
  timing.validate();
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : records) {
    if (!seen.insert({r.participant_id, r.video_id}).second) {
      throw ValidationError("duplicate " + record_label(r));
    }
    for (const auto& d : active_dimensions()) {
      const auto it = r.ratings.find(d.id);
      if (it == r.ratings.end()) {
        throw ValidationError(record_label(r) + " is missing a rating for dimension " +
                              std::string(d.name));
      }
      if (it->second < 1 || it->second > 7) {
        throw ValidationError(record_label(r) + " dimension " + std::string(d.name) +
                              ": rating " + std::to_string(it->second) + " outside 1..7");
      }
    }
  }
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw LoadError("manifest not found: " + path.string());
  const auto doc = KeyValueDocument::load(path);
  DatasetManifest m;
  m.root = path.parent_path();
  const auto& g = doc.globals;
  try {
    m.schema_version = require_string(g, "schema_version");
    m.geometry.width_px = get_double(g, "screen.width_px", m.geometry.width_px);
    m.geometry.height_px = get_double(g, "screen.height_px", m.geometry.height_px);
    m.geometry.diagonal_inches = get_double(g, "screen.diagonal_inches", m.geometry.diagonal_inches);
    m.geometry.viewing_distance_cm =
        get_double(g, "screen.viewing_distance_cm", m.geometry.viewing_distance_cm);
    m.timing.duration_s = get_double(g, "stimulus.duration_s", m.timing.duration_s);
    m.timing.video_fps = get_double(g, "stimulus.video_fps", m.timing.video_fps);
    m.timing.gaze_hz = get_double(g, "stimulus.gaze_hz", m.timing.gaze_hz);
  } catch (const ConfigError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  for (const auto& section : doc.sections) {
    if (section.name != "record") {
      throw ValidationError(path.string() + ":" + std::to_string(section.line) +
                            ": unknown section [" + section.name + "]");
    }
    m.records.push_back(parse_record(section, path.string()));
  }
  m.validate();
  for (const auto& r : m.records) {
    for (const auto& p : {r.frames, r.gaze}) {
      if (!std::filesystem::exists(m.resolve(p))) {
        throw LoadError(record_label(r) + " references missing file " + m.resolve(p).string());
      }
    }
  }
  return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  KeyValueDocument doc;
  auto num = [](double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (s.back() == '.') s.pop_back();
    return s;
  };
  doc.globals["schema_version"] = manifest.schema_version;
  doc.globals["screen.width_px"] = num(manifest.geometry.width_px);
  doc.globals["screen.height_px"] = num(manifest.geometry.height_px);
  doc.globals["screen.diagonal_inches"] = num(manifest.geometry.diagonal_inches);
  doc.globals["screen.viewing_distance_cm"] = num(manifest.geometry.viewing_distance_cm);
  doc.globals["stimulus.duration_s"] = num(manifest.timing.duration_s);
  doc.globals["stimulus.video_fps"] = num(manifest.timing.video_fps);
  doc.globals["stimulus.gaze_hz"] = num(manifest.timing.gaze_hz);
  for (const auto& r : manifest.records) {
    KeyValueDocument::Section s{"record", 0, {}};
    s.values["participant_id"] = r.participant_id;
    s.values["video_id"] = r.video_id;
    s.values["frames"] = r.frames.generic_string();
    s.values["gaze"] = r.gaze.generic_string();
    if (r.ground_truth) s.values["ground_truth"] = r.ground_truth->generic_string();
    for (const auto& [id, rating] : r.ratings) {
      s.values[std::string(kRatingPrefix) + std::string(dimension(id).name)] = std::to_string(rating);
    }
    doc.sections.push_back(std::move(s));
  }
  write_text_file(path, "# gazenet dataset manifest\n" + doc.serialize());
}

SequenceRecord load_record(const DatasetManifest& manifest, const RecordRef& ref) {
  SequenceRecord rec;
  rec.participant_id = ref.participant_id;
  rec.video_id = ref.video_id;
  rec.frames = read_byte_array(manifest.resolve(ref.frames));
  if (rec.frames.rank() != 4 || rec.frames.shape[3] != 3) {
    throw ShapeError(manifest.resolve(ref.frames).string() + " must be T x H x W x 3, got " +
                     shape_to_string(rec.frames.shape));
  }
  rec.gaze = read_gaze_csv(manifest.resolve(ref.gaze));
  rec.ratings = ref.ratings;
  return rec;
}

}  // namespace gazenet
