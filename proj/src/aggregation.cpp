#include "facefake/aggregation.hpp"

#include <algorithm>

namespace facefake {

void check_aggregation_config(const AggregationConfig& cfg) {
  if (!(cfg.low_conf >= 0.5f && cfg.low_conf <= cfg.high_conf &&
        cfg.high_conf <= 1.0f)) {
    throw ConfigError("aggregation thresholds need 0.5 <= low <= high <= 1");
  }
  if (cfg.high_weight < 1.0f) {
    throw ConfigError("high_weight must be >= 1");
  }
}

float confidence(float p) { return std::max(p, 1.0f - p); }

VideoPrediction aggregate_video(const std::vector<FramePrediction>& preds,
                                const AggregationConfig& cfg) {
  check_aggregation_config(cfg);
  if (preds.empty()) throw DataError("aggregate_video needs at least one frame");
  const std::string& vid = preds.front().video_id;
  for (const FramePrediction& f : preds) {
    if (f.video_id != vid) {
      throw DataError("aggregate_video got mixed video ids: " + vid + " vs " +
                      f.video_id);
    }
  }

  VideoPrediction out;
  out.video_id = vid;
  // Slack keeps threshold comparisons faithful to the real-valued rule when
  // 1 - p lands one ulp off a representable boundary.
  constexpr double kBoundarySlack = 1e-9;
  double weighted = 0, weight_sum = 0, plain_sum = 0;
  for (const FramePrediction& f : preds) {
    plain_sum += f.p_fake;
    const double conf =
        cfg.folded_confidence ? std::max(f.p_fake, 1.0 - f.p_fake) : f.p_fake;
    if (conf < cfg.low_conf - kBoundarySlack) {
      ++out.frames_discarded;
      continue;
    }
    const double w =
        conf >= cfg.high_conf - kBoundarySlack ? cfg.high_weight : cfg.base_weight;
    weighted += w * f.p_fake;
    weight_sum += w;
    ++out.frames_used;
  }
  if (out.frames_used == 0) {
    out.fallback_used = true;
    out.p_fake = plain_sum / preds.size();
  } else {
    out.p_fake = weighted / weight_sum;
  }
  return out;
}

}  // namespace facefake
