#pragma once

#include <array>
#include <string>
#include <vector>

#include "facefake/errors.hpp"

namespace facefake {

/// Compound-scaling bases and exponent. Depth scales as alpha^phi, width as
/// beta^phi and input resolution as gamma^phi.
struct ScalingConfig {
  float alpha = 1.2f;
  float beta = 1.1f;
  float gamma = 1.15f;
  float phi = 0.0f;
};

struct Multipliers {
  float depth = 1;
  float width = 1;
  float resolution = 1;
};

Multipliers compound_multipliers(const ScalingConfig& cfg);

/// True when alpha * beta^2 * gamma^2 lies in [1.9, 2.1]; violations are a
/// warning, not an error (the FLOPs-doubling constraint is a guideline).
bool scaling_constraint_ok(const ScalingConfig& cfg);

/// Canonical divisible filter rounding: snap channels * width_mult to the
/// nearest multiple of divisor (at least divisor), bumping up one step when
/// the snap lost more than 10%.
int round_width(int channels, float width_mult, int divisor = 8);

/// ceil(repeats * depth_mult).
int round_depth(int repeats, float depth_mult);

struct StageSpec {
  int expansion = 6;
  int channels_out = 0;
  int repeats = 1;
  int stride = 1;
  int kernel = 3;
  float se_ratio = 0.25f;
};

/// Resolved backbone plan: seven scaled inverted-bottleneck stages plus stem
/// and head widths.
struct BackboneConfig {
  std::vector<StageSpec> stages;  // exactly 7
  int stem_channels = 32;
  int head_channels = 1280;
  int input_resolution = 224;
  float dropout = 0.2f;
  float width_mult = 1.0f;
  float depth_mult = 1.0f;
  float drop_connect_rate = 0.2f;
  int in_channels = 3;
};

/// Named family variants B0..B7. Only B4's 380 px input is anchored in the
/// evaluation this project mirrors; the rest are the family's published
/// defaults and stay configurable.
struct VariantParams {
  float width_mult;
  float depth_mult;
  int resolution;
  float dropout;
};
const VariantParams& variant_params(const std::string& name);  // throws ConfigError

/// Default training batch size per variant (adapted to model size),
/// overridable everywhere.
int default_batch_size(const std::string& variant);

/// Builds the scaled stage plan for a named variant. width_budget in (0, 1]
/// shrinks every channel count after variant scaling (re-rounded), giving
/// tiny models with identical topology for desk-scale training.
BackboneConfig build_variant(const std::string& name, float width_budget = 1.0f);

/// Same, but from raw compound-scaling coefficients; resolution_base is
/// scaled by gamma^phi and rounded.
BackboneConfig build_custom(const ScalingConfig& cfg, float width_budget = 1.0f,
                            int resolution_base = 224);

/// Analytic walk over a BackboneConfig: every parameter tensor the built
/// network must own (same names, same shapes) plus activation shapes after
/// each block, computed purely from the plan arithmetic.
struct PlanParam {
  std::string name;
  std::vector<int> shape;
};
struct PlanActivation {
  std::string after;  // layer name
  int channels, height, width;
};
struct ModelPlan {
  std::vector<PlanParam> params;
  std::vector<PlanActivation> activations;
  long long total_params = 0;
};
ModelPlan walk_plan(const BackboneConfig& cfg);

}  // namespace facefake
