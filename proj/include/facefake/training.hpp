#pragma once

#include <filesystem>
#include <random>
#include <set>

#include "facefake/aggregation.hpp"
#include "facefake/manifest.hpp"
#include "facefake/nn/backbone.hpp"
#include "facefake/nn/checkpoint.hpp"

namespace facefake {

struct TrainingConfig {
  float base_lr = 0.01f;
  float momentum = 0.9f;
  float poly_power = 1.0f;
  int total_steps = 1000;
  int batch_size = 16;  // even; half real, half fake
  float label_smoothing_eps = 0.05f;
  std::set<int> holdout_folders = {0, 1, 2};
  uint64_t seed = 0;
  int validation_every = 200;
  bool horizontal_flip = true;
  int compute_threads = 1;
};

void check_training_config(const TrainingConfig& cfg);  // throws ConfigError

/// base_lr * (1 - step/total_steps)^poly_power, clamped at 0 beyond the end.
float poly_lr(int step, const TrainingConfig& cfg);

/// y*(1-eps) + eps/2 for hard labels y in {0, 1}.
float smooth_labels(int y, float eps);

/// Exact disjoint partition by the folder encoded in each video id. Videos
/// without a folder prefix stay on the training side.
std::pair<DatasetManifest, DatasetManifest> split_by_folder(
    const DatasetManifest& manifest, const std::set<int>& holdout_folders);

/// Deterministic stream of balanced batches of manifest-entry indices.
/// Each epoch reshuffles the majority class and resamples the minority class
/// with replacement; every batch holds batch_size/2 of each label.
class BalancedBatchStream {
 public:
  BalancedBatchStream(const DatasetManifest& manifest, int batch_size,
                      uint64_t seed);
  std::vector<int> next();

 private:
  void start_epoch();

  std::vector<int> real_, fake_;
  int half_;
  std::mt19937_64 rng_;
  std::vector<int> epoch_real_, epoch_fake_;
  size_t cursor_ = 0;
};

/// In-memory crop store: images decoded once, resized to the model input
/// resolution, kept as 8-bit and converted per batch.
class CropDataset {
 public:
  CropDataset(const DatasetManifest& manifest, const std::filesystem::path& root,
              int input_resolution);

  int size() const { return static_cast<int>(entries_.size()); }
  const ManifestEntry& entry(int i) const { return *entries_[i]; }

  /// Writes sample i into batch slot `slot`, scaled to [-1, 1].
  void fill(int i, nn::Tensor<float>& batch, int slot, bool flip) const;

 private:
  std::vector<const ManifestEntry*> entries_;
  std::vector<std::vector<uint8_t>> pixels_;  // interleaved RGB, res x res
  int resolution_;
};

struct ValidationReport {
  int step = 0;
  double logloss_overall = 0;
  double logloss_real = 0;   // -1 when the class is absent
  double logloss_fake = 0;   // -1 when the class is absent
  double auc = 0;            // -1 when undefined
};

struct TrainOptions {
  AggregationConfig aggregation;
  std::filesystem::path log_path;  // JSON-lines; empty = no log file
};

struct TrainResult {
  std::vector<double> step_losses;
  std::vector<ValidationReport> validations;
  nn::Checkpoint best;      // by overall holdout log loss (final when no holdout)
  int best_step = -1;
  double best_logloss = -1;
};

/// SGD with momentum: v <- momentum*v + g, theta <- theta - lr(t)*v, on
/// binary cross-entropy against smoothed labels. Holdout folders are scored
/// at video level through the aggregation rule. Throws NumericError with the
/// last learning rate and batch ids when the loss stops being finite.
TrainResult train(nn::EfficientNet<float>& model, const DatasetManifest& manifest,
                  const std::filesystem::path& data_root,
                  const TrainingConfig& cfg, const TrainOptions& options = {});

/// Frame predictions for every crop in the manifest, batched eval-mode
/// forward passes. Exposed for the predict command and validation.
std::vector<FramePrediction> predict_crops(nn::EfficientNet<float>& model,
                                           const CropDataset& dataset,
                                           int batch_size = 64);

}  // namespace facefake
