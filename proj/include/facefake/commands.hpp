#pragma once

#include <filesystem>
#include <optional>

#include "facefake/metrics.hpp"
#include "facefake/preprocess.hpp"
#include "facefake/run_config.hpp"
#include "facefake/synth.hpp"
#include "facefake/training.hpp"

namespace facefake {

/// Builds the three cascade stage scorers named by config.scorer:
/// "blob" for the deterministic heuristic, "conv:<dir>" for trained scorer
/// archives stage1.ckpt / stage2.ckpt / stage3.ckpt under <dir>.
struct ScorerSet {
  std::unique_ptr<StageScorer> stage1, stage2, stage3;
};
ScorerSet make_scorers(const RunConfig& cfg);

struct ExtractResult {
  int videos_ok = 0;
  std::vector<std::string> failures;
  int crops_written = 0;
  int masks_written = 0;
};

/// sampling -> detection -> crops -> masks -> manifest, under out_dir.
/// Detection JSON lands in out_dir/detections/<video_id>.json. Throws
/// DataError when the input dir is empty or no video succeeds.
ExtractResult cmd_extract(const std::filesystem::path& input_dir,
                          const std::filesystem::path& out_dir,
                          const RunConfig& cfg);

struct TrainCmdResult {
  std::filesystem::path checkpoint_path;
  std::filesystem::path log_path;
  std::optional<ValidationReport> final_validation;
  int best_step = -1;
  double final_train_loss = 0;
};

/// Trains the configured variant on a materialized dataset; crop paths in
/// the manifest resolve relative to the manifest's directory. Writes
/// model.ckpt and training_log.jsonl under out_dir.
TrainCmdResult cmd_train(const std::filesystem::path& manifest_path,
                         const std::filesystem::path& out_dir,
                         const RunConfig& cfg);

struct PredictCmdResult {
  std::filesystem::path csv_path;
  std::filesystem::path report_path;
  std::vector<VideoPrediction> predictions;
};

/// Scores videos (frame-directory input) or an already-extracted crop
/// dataset (a directory containing manifest.json). Writes predictions.csv
/// ("filename,label", six-decimal fake probabilities) and report.json.
PredictCmdResult cmd_predict(const std::filesystem::path& input,
                             const std::filesystem::path& checkpoint_path,
                             const std::filesystem::path& out_dir,
                             const RunConfig& cfg);

struct EvaluateCmdResult {
  double logloss = 0;
  std::optional<double> logloss_real, logloss_fake;
  std::optional<double> auc;
  PrecisionRecallF1 prf;
  int n_videos = 0;
  double threshold = 0.5;
  std::string table;
};

/// Joins a predictions CSV with a labels file (filename,label[,original];
/// labels REAL/FAKE or 0/1), computes the metric set and renders the
/// comparison table with the published reference rows.
EvaluateCmdResult cmd_evaluate(const std::filesystem::path& predictions_csv,
                               const std::filesystem::path& labels_file,
                               const std::optional<std::filesystem::path>& report_json);

SynthSummary cmd_synth(const std::filesystem::path& out_dir,
                       const SynthOptions& options);

}  // namespace facefake
