#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "facefake/aggregation.hpp"
#include "facefake/detector.hpp"
#include "facefake/preprocess.hpp"
#include "facefake/training.hpp"

namespace facefake {

/// Merged settings for a pipeline run. Precedence: built-in defaults, then
/// the config file (--config or $FACEFAKE_CONFIG), then command-line flags.
struct RunConfig {
  uint64_t seed = 1234;
  int workers = 1;

  CascadeConfig detector;
  std::string scorer = "blob";  // deterministic blob scorer; "conv:<dir>" loads
                                // trained stage scorers from checkpoints

  SamplingPlan sampling;
  float margin_fraction = 0.30f;
  SSIMParams ssim;
  bool write_masks = true;

  std::string variant = "B5";
  float width_budget = 1.0f;
  int input_resolution = 0;  // 0 = the variant's own resolution

  TrainingConfig training;
  AggregationConfig aggregation;
};

/// Applies every key present in the JSON object, leaving the rest untouched.
/// Unknown keys raise ConfigError (typos should not pass silently).
void apply_config_json(RunConfig& cfg, const nlohmann::json& j);

/// defaults -> optional file (explicit path wins over $FACEFAKE_CONFIG).
RunConfig load_run_config(const std::optional<std::filesystem::path>& file);

/// Full echo of the effective configuration; reports embed it.
nlohmann::json run_config_to_json(const RunConfig& cfg);

}  // namespace facefake
