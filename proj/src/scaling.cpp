#include "facefake/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace facefake {

Multipliers compound_multipliers(const ScalingConfig& cfg) {
  if (cfg.alpha <= 1 || cfg.beta <= 1 || cfg.gamma <= 1) {
    throw ConfigError("scaling bases alpha, beta, gamma must exceed 1");
  }
  if (cfg.phi < 0) throw ConfigError("phi must be >= 0");
  Multipliers m;
  m.depth = std::pow(cfg.alpha, cfg.phi);
  m.width = std::pow(cfg.beta, cfg.phi);
  m.resolution = std::pow(cfg.gamma, cfg.phi);
  return m;
}

bool scaling_constraint_ok(const ScalingConfig& cfg) {
  const float v = cfg.alpha * cfg.beta * cfg.beta * cfg.gamma * cfg.gamma;
  return v >= 1.9f && v <= 2.1f;
}

int round_width(int channels, float width_mult, int divisor) {
  const float target = channels * width_mult;
  int v = std::max(divisor,
                   static_cast<int>(target + divisor / 2.0f) / divisor * divisor);
  if (v < 0.9f * target) v += divisor;
  return v;
}

int round_depth(int repeats, float depth_mult) {
  return static_cast<int>(std::ceil(repeats * depth_mult));
}

namespace {

// Seven-stage base plan (expansion, channels, repeats, stride, kernel).
const std::array<StageSpec, 7> kBaseStages = {{
    {1, 16, 1, 1, 3, 0.25f},
    {6, 24, 2, 2, 3, 0.25f},
    {6, 40, 2, 2, 5, 0.25f},
    {6, 80, 3, 2, 3, 0.25f},
    {6, 112, 3, 1, 5, 0.25f},
    {6, 192, 4, 2, 5, 0.25f},
    {6, 320, 1, 1, 3, 0.25f},
}};
constexpr int kBaseStem = 32;
constexpr int kBaseHead = 1280;

const std::map<std::string, VariantParams>& variant_table() {
  static const std::map<std::string, VariantParams> table = {
      {"B0", {1.0f, 1.0f, 224, 0.2f}}, {"B1", {1.0f, 1.1f, 240, 0.2f}},
      {"B2", {1.1f, 1.2f, 260, 0.3f}}, {"B3", {1.2f, 1.4f, 300, 0.3f}},
      {"B4", {1.4f, 1.8f, 380, 0.4f}}, {"B5", {1.6f, 2.2f, 456, 0.4f}},
      {"B6", {1.8f, 2.6f, 528, 0.5f}}, {"B7", {2.0f, 3.1f, 600, 0.5f}},
  };
  return table;
}

std::string normalize_variant(const std::string& name) {
  std::string up = name;
  std::transform(up.begin(), up.end(), up.begin(), ::toupper);
  return up;
}

BackboneConfig scale_plan(float width_mult, float depth_mult, int resolution,
                          float dropout, float width_budget) {
  if (width_budget <= 0 || width_budget > 1) {
    throw ConfigError("width_budget must lie in (0, 1]");
  }
  const auto widen = [&](int base_channels) {
    int c = round_width(base_channels, width_mult);
    if (width_budget < 1) c = round_width(c, width_budget);
    return c;
  };
  BackboneConfig cfg;
  cfg.stem_channels = widen(kBaseStem);
  cfg.head_channels = widen(kBaseHead);
  cfg.input_resolution = resolution;
  cfg.dropout = dropout;
  cfg.width_mult = width_mult;
  cfg.depth_mult = depth_mult;
  for (const StageSpec& base : kBaseStages) {
    StageSpec s = base;
    s.channels_out = widen(base.channels_out);
    s.repeats = round_depth(base.repeats, depth_mult);
    cfg.stages.push_back(s);
  }
  return cfg;
}

}  // namespace

const VariantParams& variant_params(const std::string& name) {
  const auto& table = variant_table();
  const auto it = table.find(normalize_variant(name));
  if (it == table.end()) throw ConfigError("unknown variant: " + name);
  return it->second;
}

int default_batch_size(const std::string& variant) {
  static const std::map<std::string, int> sizes = {
      {"B0", 64}, {"B1", 48}, {"B2", 40}, {"B3", 32},
      {"B4", 24}, {"B5", 16}, {"B6", 12}, {"B7", 8},
  };
  const auto it = sizes.find(normalize_variant(variant));
  if (it == sizes.end()) throw ConfigError("unknown variant: " + variant);
  return it->second;
}

BackboneConfig build_variant(const std::string& name, float width_budget) {
  const VariantParams& p = variant_params(name);
  return scale_plan(p.width_mult, p.depth_mult, p.resolution, p.dropout,
                    width_budget);
}

BackboneConfig build_custom(const ScalingConfig& cfg, float width_budget,
                            int resolution_base) {
  const Multipliers m = compound_multipliers(cfg);
  const int resolution =
      static_cast<int>(std::round(resolution_base * m.resolution));
  return scale_plan(m.width, m.depth, resolution, 0.2f, width_budget);
}

namespace {

int conv_out(int in, int kernel, int stride) {
  const int pad = kernel / 2;
  return (in + 2 * pad - kernel) / stride + 1;
}

}  // namespace

ModelPlan walk_plan(const BackboneConfig& cfg) {
  if (cfg.stages.size() != 7) {
    throw ConfigError("backbone plan must have exactly 7 stages");
  }
  ModelPlan plan;
  const auto param = [&](const std::string& name, std::vector<int> shape) {
    long long n = 1;
    for (int d : shape) n *= d;
    plan.total_params += n;
    plan.params.push_back({name, std::move(shape)});
  };
  const auto bn = [&](const std::string& prefix, int c) {
    param(prefix + ".gamma", {c});
    param(prefix + ".beta", {c});
  };

  int h = cfg.input_resolution, w = cfg.input_resolution;
  param("stem.conv.weight", {cfg.stem_channels, cfg.in_channels, 3, 3});
  bn("stem.bn", cfg.stem_channels);
  h = conv_out(h, 3, 2);
  w = conv_out(w, 3, 2);
  plan.activations.push_back({"stem", cfg.stem_channels, h, w});

  int channels = cfg.stem_channels;
  int block = 0;
  for (const StageSpec& stage : cfg.stages) {
    if (stage.repeats < 1) throw ConfigError("stage repeats must be >= 1");
    for (int r = 0; r < stage.repeats; ++r) {
      const std::string p = "block" + std::to_string(block);
      const int cin = channels;
      const int stride = r == 0 ? stage.stride : 1;
      const int mid = cin * stage.expansion;
      if (stage.expansion > 1) {
        param(p + ".expand.conv.weight", {mid, cin, 1, 1});
        bn(p + ".expand.bn", mid);
      }
      param(p + ".dw.conv.weight", {mid, 1, stage.kernel, stage.kernel});
      bn(p + ".dw.bn", mid);
      const int se = std::max(1, static_cast<int>(cin * stage.se_ratio));
      param(p + ".se.fc1.weight", {se, mid});
      param(p + ".se.fc1.bias", {se});
      param(p + ".se.fc2.weight", {mid, se});
      param(p + ".se.fc2.bias", {mid});
      param(p + ".project.conv.weight", {stage.channels_out, mid, 1, 1});
      bn(p + ".project.bn", stage.channels_out);
      h = conv_out(h, stage.kernel, stride);
      w = conv_out(w, stage.kernel, stride);
      plan.activations.push_back({p, stage.channels_out, h, w});
      channels = stage.channels_out;
      ++block;
    }
  }

  param("head.conv.weight", {cfg.head_channels, channels, 1, 1});
  bn("head.bn", cfg.head_channels);
  plan.activations.push_back({"head", cfg.head_channels, h, w});
  plan.activations.push_back({"pool", cfg.head_channels, 1, 1});
  param("classifier.weight", {1, cfg.head_channels});
  param("classifier.bias", {1});
  return plan;
}

}  // namespace facefake
