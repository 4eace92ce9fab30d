#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gazenet/types.hpp"

namespace gazenet {

inline constexpr const char* kManifestSchemaVersion = "1";

// Reference to one trial's files; paths are relative to the manifest's directory.
struct RecordRef {
  std::string participant_id;
  std::string video_id;
  std::filesystem::path frames;
  std::filesystem::path gaze;
  std::optional<std::filesystem::path> ground_truth;
  std::map<int, int> ratings;
};

struct DatasetManifest {
  std::string schema_version = kManifestSchemaVersion;
  ScreenGeometry geometry;
  StimulusTiming timing;
  std::vector<RecordRef> records;
  std::filesystem::path root;  // directory the relative paths resolve against

  std::filesystem::path resolve(const std::filesystem::path& p) const { return root / p; }
  std::vector<std::string> participants() const;  // sorted, unique

  // Checks id uniqueness, rating bounds and completeness; throws ValidationError.
  void validate() const;
};

// Parses and validates; also checks that every referenced file exists
// (LoadError naming the path otherwise).
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

// Loads the raw streams of one record.
SequenceRecord load_record(const DatasetManifest& manifest, const RecordRef& ref);

}  // namespace gazenet
