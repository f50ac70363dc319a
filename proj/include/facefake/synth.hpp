#pragma once

#include <filesystem>

#include "facefake/image.hpp"

namespace facefake {

/// Desk-scale stand-in for a face-swap corpus: every video is a frame
/// directory with a procedurally drawn face-like blob drifting over a dark
/// background. Fake videos copy their paired real video frame for frame and
/// add a localized artifact (patch blur, boundary seam, slight color shift).
struct SynthOptions {
  int n_videos = 60;
  int frames_per_video = 40;
  int width = 160;
  int height = 160;
  int n_folders = 10;
  double fps = 30.0;
  float fake_fraction = 0.5f;
  uint64_t seed = 0;
};

struct SynthSummary {
  int real_videos = 0;
  int fake_videos = 0;
  int frames_written = 0;
};

/// Deterministic per seed: identical options produce byte-identical trees.
/// Emits labels.csv ("filename,label,original") at the root.
SynthSummary generate_synthetic_dataset(const std::filesystem::path& out_dir,
                                        const SynthOptions& options);

/// Single training patch for the stage scorers: a face-like blob of the
/// requested relative size, off-center by the given jitter (fractions of the
/// patch), with its ground-truth box.
struct FacePatch {
  ImageBuffer image;
  float x1, y1, x2, y2;  // face box in patch pixels
};
FacePatch render_face_patch(int size, float face_scale, float jitter_x,
                            float jitter_y, uint64_t seed);

/// Faceless patch (gradient + noise), the negative class.
ImageBuffer render_background_patch(int size, uint64_t seed);

}  // namespace facefake
