#pragma once

#include <vector>

#include "facefake/manifest.hpp"

namespace facefake {

/// Confidence-weighted frame fusion. Frames below low_conf are discarded,
/// frames at or above high_conf count high_weight times; if everything is
/// discarded the verdict falls back to the plain mean of all frames.
struct AggregationConfig {
  double low_conf = 0.6;
  double high_conf = 0.9;
  double high_weight = 2.0;
  double base_weight = 1.0;
  // Folded confidence max(p, 1-p) treats real and fake verdicts alike;
  // switch off to rank frames by raw p instead.
  bool folded_confidence = true;
  enum class Fallback { kMeanAll } fallback = Fallback::kMeanAll;
};

void check_aggregation_config(const AggregationConfig& cfg);  // throws ConfigError

/// Distance-from-coin-flip score: max(p, 1-p), in [0.5, 1].
float confidence(float p);

VideoPrediction aggregate_video(const std::vector<FramePrediction>& preds,
                                const AggregationConfig& cfg);

}  // namespace facefake
