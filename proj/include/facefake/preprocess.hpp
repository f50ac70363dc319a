#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "facefake/detector.hpp"
#include "facefake/manifest.hpp"
#include "facefake/ssim.hpp"

namespace facefake {

struct SamplingPlan {
  int frames_per_video = 32;
  enum class Strategy { kUniform } strategy = Strategy::kUniform;
};

/// Evenly spaced frame indices: round(i * (frame_count-1) / (n-1)) for
/// n = min(frames_per_video, frame_count), deduplicated and sorted. With
/// n >= 2 the first index is 0 and the last is frame_count - 1.
std::vector<int> sample_frames(int frame_count, const SamplingPlan& plan);

/// Expands the box by margin_fraction of its size (half per side), clips to
/// the frame, rounds outward to whole pixels, and crops at the original
/// resolution. Throws DataError when the box misses the frame entirely.
FaceCrop crop_with_margin(const ImageBuffer& frame, const BoundingBox& box,
                          float margin_fraction, const std::string& video_id,
                          int frame_index, Label label = Label::kUnknown);

/// One source video: a directory of frames <index>.png (zero-padded to six
/// digits) plus meta.json {"fps": float, "frame_count": int}.
class FrameDirVideo {
 public:
  explicit FrameDirVideo(std::filesystem::path dir);

  const std::string& id() const { return id_; }
  const std::filesystem::path& dir() const { return dir_; }
  int frame_count() const { return frame_count_; }
  double fps() const { return fps_; }
  ImageBuffer frame(int index) const;

 private:
  std::filesystem::path dir_;
  std::string id_;
  int frame_count_ = 0;
  double fps_ = 0;
};

/// Source listing entry, typically parsed from labels.csv next to the
/// video directories.
struct VideoListing {
  std::filesystem::path dir;
  std::string video_id;
  Label label = Label::kUnknown;
  std::string original_video_id;
};

/// Scans a dataset root for frame-directory videos. When labels.csv
/// ("filename,label,original") is present, labels and fake/real pairings are
/// attached; otherwise all entries are UNKNOWN. Sorted by video id.
std::vector<VideoListing> scan_input_dir(const std::filesystem::path& input_dir);

struct MaterializeOptions {
  float margin_fraction = 0.30f;
  SSIMParams ssim;
  bool write_masks = true;
  int workers = 1;
};

struct MaterializeResult {
  DatasetManifest manifest;
  std::vector<std::string> warnings;        // e.g. fakes without a paired real
  std::vector<std::string> failed_videos;   // missing detections etc., non-fatal
  int crops_written = 0;
  int masks_written = 0;
};

/// Writes crops (and SSIM masks for fake crops with an aligned real frame)
/// under out_dir/crops and out_dir/masks, then assembles and validates the
/// manifest at out_dir/manifest.json. Detection JSON is expected at
/// detections_dir/<video_id>.json. Re-running with identical inputs
/// overwrites files with identical bytes. Throws DataError when no video
/// succeeds.
MaterializeResult materialize_dataset(const std::vector<VideoListing>& videos,
                                      const std::filesystem::path& detections_dir,
                                      const std::filesystem::path& out_dir,
                                      const MaterializeOptions& options);

}  // namespace facefake
