#pragma once

#include <memory>

#include "facefake/detector.hpp"
#include "facefake/nn/layers.hpp"

namespace facefake {

/// Trainable convolutional stage scorer (inputs 12, 24 or 48 px), built on
/// the same layer primitives as the classifier. Outputs a face logit, four
/// box-regression offsets and, when configured, five landmarks squashed to
/// the unit square.
///
/// score() is not safe for concurrent calls on one instance (layers cache
/// activations); give each worker its own clone().
class ConvScorer : public StageScorer {
 public:
  ConvScorer(int input_size, bool with_landmarks, uint64_t seed = 0);

  int input_size() const override { return input_; }
  StageScore score(const ImageBuffer& patch) const override;
  std::vector<StageScore> score_batch(
      const std::vector<ImageBuffer>& patches) const override;

  struct PatchExample {
    ImageBuffer patch;
    float is_face = 0;                                     // 0 or 1
    Eigen::Vector4f offsets = Eigen::Vector4f::Zero();     // positives only
  };

  struct TrainStats {
    std::vector<float> losses;
  };

  /// Plain SGD on BCE(face logit) + squared error on offsets of positive
  /// patches. Deterministic in (examples, seed).
  TrainStats fit(const std::vector<PatchExample>& examples, int steps,
                 int batch_size, float lr, uint64_t seed);

  void save(const std::filesystem::path& path) const;
  static std::unique_ptr<ConvScorer> load(const std::filesystem::path& path);
  std::unique_ptr<ConvScorer> clone() const;

 private:
  struct Net;
  void fill_input(const ImageBuffer& patch, nn::Tensor<float>& batch,
                  int slot) const;
  std::vector<StageScore> forward_scores(nn::Tensor<float>& batch) const;

  int input_;
  bool with_landmarks_;
  std::shared_ptr<Net> net_;  // mutable activation caches live here
};

}  // namespace facefake
