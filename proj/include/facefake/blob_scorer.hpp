#pragma once

#include "facefake/detector.hpp"

namespace facefake {

/// Deterministic rule-based stage scorer for bright, roughly convex blobs on
/// darker backgrounds (the synthetic face generator draws exactly these).
///
/// A patch scores high when it has enough contrast, a bright center, dark
/// corners, and a plausible bright-area fraction. Regression offsets point
/// at the bright region's bounding box, so successive stages converge onto
/// the blob regardless of how the proposal window was placed.
class BrightBlobScorer : public StageScorer {
 public:
  struct Options {
    float min_contrast = 60.0f;   // gray-level span below which p_face = 0
    float min_coverage = 0.15f;
    float max_coverage = 0.92f;
    float coverage_taper = 0.15f; // linear falloff width outside the band
    // Regression targets the bright bounding box expanded by this fraction,
    // keeping a dark ring inside refinement crops.
    float box_pad = 0.2f;
  };

  BrightBlobScorer(int input_size, bool with_landmarks);
  BrightBlobScorer(int input_size, bool with_landmarks, Options opts);

  int input_size() const override { return input_; }
  StageScore score(const ImageBuffer& patch) const override;

 private:
  int input_;
  bool with_landmarks_;
  Options opts_;
};

inline BrightBlobScorer::BrightBlobScorer(int input_size, bool with_landmarks,
                                          Options opts)
    : input_(input_size), with_landmarks_(with_landmarks), opts_(opts) {}

inline BrightBlobScorer::BrightBlobScorer(int input_size, bool with_landmarks)
    : BrightBlobScorer(input_size, with_landmarks, Options()) {}

}  // namespace facefake
