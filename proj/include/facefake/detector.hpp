#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "facefake/geometry.hpp"
#include "facefake/image.hpp"

namespace facefake {

/// Image-pyramid parameters for the proposal stage.
struct PyramidSpec {
  int min_face_size = 20;
  float scale_factor = 0.709f;
  int stage1_input = 12;
};

/// Descending pyramid scales: stage1_input / min_face_size, then repeated
/// multiplication by scale_factor while the scaled short side still fits a
/// stage-1 patch. Throws EmptyPyramidError when no scale survives.
std::vector<float> build_pyramid(int height, int width, const PyramidSpec& spec);

/// Output of one scorer call on one patch.
struct StageScore {
  float p_face = 0;
  Eigen::Vector4f box_offsets = Eigen::Vector4f::Zero();
  // Present only for stage-3 scorers, normalized to [0,1]^2 of the patch.
  std::optional<std::array<Eigen::Vector2f, 5>> landmarks;
};

/// Per-stage scoring contract. A scorer receives a square patch with the
/// stage input size in [0,255] RGB (or gray) and returns a face probability,
/// box regression offsets, and optionally landmarks.
///
/// Instances must be safe for concurrent read-only scoring, or callers give
/// each worker its own instance.
class StageScorer {
 public:
  virtual ~StageScorer() = default;
  virtual int input_size() const = 0;
  virtual StageScore score(const ImageBuffer& patch) const = 0;
  // Batched entry point; the default loops over score(). Trained scorers
  // override it with one batched forward pass.
  virtual std::vector<StageScore> score_batch(
      const std::vector<ImageBuffer>& patches) const;
};

struct CascadeConfig {
  std::array<float, 3> stage_thresholds{0.6f, 0.7f, 0.8f};
  std::array<float, 3> nms_thresholds{0.7f, 0.7f, 0.7f};
  std::array<IouMode, 3> nms_modes{IouMode::kUnion, IouMode::kUnion,
                                   IouMode::kMin};
  PyramidSpec pyramid;
  int detector_input_cap = 640;  // max frame side fed to the cascade
};

struct Detection {
  BoundingBox box;
  Landmarks landmarks;
};

/// Downscales so the longer side equals `cap` and reports the applied
/// scale; identity with scale 1 when the frame already fits.
std::pair<ImageBuffer, float> dynamic_resize(const ImageBuffer& frame, int cap);

/// Candidate counts surviving each cascade stage.
struct CascadeTrace {
  std::array<int, 3> candidates_after_stage{0, 0, 0};
};

/// Three-stage cascade: proposal over an image pyramid, refinement at 24 px,
/// output at 48 px with landmarks. Candidates are thresholded, regressed and
/// suppressed at every stage, so the candidate count never increases across
/// stages. Returned boxes are clipped to the frame; landmarks lie inside it.
std::vector<Detection> detect_faces(const ImageBuffer& frame,
                                    const StageScorer& stage1,
                                    const StageScorer& stage2,
                                    const StageScorer& stage3,
                                    const CascadeConfig& config,
                                    CascadeTrace* trace = nullptr);

/// Per-video detection archive, frame index -> detections.
using VideoDetections = std::map<int, std::vector<Detection>>;

void save_detections(const std::string& video_id, const VideoDetections& dets,
                     const std::filesystem::path& path);
std::pair<std::string, VideoDetections> load_detections(
    const std::filesystem::path& path);

}  // namespace facefake
