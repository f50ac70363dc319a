#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "facefake/geometry.hpp"
#include "facefake/image.hpp"

namespace facefake {

enum class Label { kReal, kFake, kUnknown };

std::string label_to_string(Label label);
Label label_from_string(const std::string& s);

/// Margin-expanded face image plus provenance.
struct FaceCrop {
  ImageBuffer image;
  std::string video_id;
  int frame_index = 0;
  BoundingBox source_box;
  float margin_fraction = 0;
  Label label = Label::kUnknown;
};

struct ManifestEntry {
  std::string crop_path;  // relative to the dataset root
  std::string video_id;
  int frame_index = 0;
  Label label = Label::kReal;
  std::string original_video_id;  // empty unless a FAKE has a paired source
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

struct Violation {
  std::string code;    // e.g. "duplicate_crop_path", "missing_original"
  std::string detail;
};

/// Empty result iff the manifest invariants hold: unique crop paths and,
/// when pairing data is present, every FAKE original references a video id
/// that appears in at least one REAL entry.
std::vector<Violation> validate_manifest(const DatasetManifest& manifest);

/// JSON document {"version": 1, "entries": [...]}. I/O problems raise
/// DataError; schema problems raise DataError with a parse message.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path);

/// Per-frame fake probability for one video.
struct FramePrediction {
  std::string video_id;
  int frame_index = 0;
  double p_fake = 0;
};

/// Confidence-weighted video verdict.
struct VideoPrediction {
  std::string video_id;
  double p_fake = 0;
  int frames_used = 0;
  int frames_discarded = 0;
  bool fallback_used = false;
};

/// Folder id encoded as the integer prefix of the video id ("03_fake_0012"
/// lives in folder 3). Returns nullopt when the id carries no folder.
std::optional<int> folder_of(const std::string& video_id);

}  // namespace facefake
