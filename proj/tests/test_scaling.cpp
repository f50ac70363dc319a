#include <doctest.h>

#include "facefake/scaling.hpp"

using namespace facefake;

TEST_CASE("compound multipliers") {
  ScalingConfig cfg;  // alpha 1.2, beta 1.1, gamma 1.15

  cfg.phi = 0;
  auto m = compound_multipliers(cfg);
  CHECK(m.depth == doctest::Approx(1.0));
  CHECK(m.width == doctest::Approx(1.0));
  CHECK(m.resolution == doctest::Approx(1.0));

  cfg.phi = 1;
  m = compound_multipliers(cfg);
  CHECK(m.depth == doctest::Approx(1.2));
  CHECK(m.width == doctest::Approx(1.1));
  CHECK(m.resolution == doctest::Approx(1.15));

  cfg.phi = 2;
  m = compound_multipliers(cfg);
  CHECK(m.depth == doctest::Approx(1.44));
  CHECK(m.width == doctest::Approx(1.21));
  CHECK(m.resolution == doctest::Approx(1.3225));
}

TEST_CASE("scaling constraint window") {
  ScalingConfig cfg;  // 1.2 * 1.21 * 1.3225 = 1.9203 -> inside
  CHECK(scaling_constraint_ok(cfg));
  cfg.alpha = 1.6f;
  CHECK(!scaling_constraint_ok(cfg));
  cfg.alpha = 1.01f;
  CHECK(!scaling_constraint_ok(cfg));
}

TEST_CASE("divisible width rounding") {
  CHECK(round_width(32, 1.0f) == 32);
  CHECK(round_width(32, 1.1f) == 32);  // 35.2 snaps down, within 10%
  CHECK(round_width(16, 1.4f) == 24);  // 22.4 snaps up
  CHECK(round_width(8, 0.1f) == 8);    // divisor floor
}

TEST_CASE("depth rounding is a ceil") {
  CHECK(round_depth(3, 1.0f) == 3);
  CHECK(round_depth(3, 1.2f) == 4);
  CHECK(round_depth(1, 2.2f) == 3);
}

TEST_CASE("variant table anchors") {
  const BackboneConfig b0 = build_variant("B0");
  CHECK(b0.input_resolution == 224);
  CHECK(b0.stem_channels == 32);
  CHECK(b0.head_channels == 1280);
  REQUIRE(b0.stages.size() == 7);
  const int base_channels[7] = {16, 24, 40, 80, 112, 192, 320};
  const int base_repeats[7] = {1, 2, 2, 3, 3, 4, 1};
  for (int i = 0; i < 7; ++i) {
    CHECK(b0.stages[i].channels_out == base_channels[i]);
    CHECK(b0.stages[i].repeats == base_repeats[i]);
  }

  CHECK(build_variant("B4").input_resolution == 380);
  CHECK(build_variant("B5").input_resolution == 456);
  CHECK_THROWS_AS(build_variant("B9"), ConfigError);
}

TEST_CASE("width budget shrinks channels after variant scaling") {
  const BackboneConfig full = build_variant("B0", 1.0f);
  const BackboneConfig tiny = build_variant("B0", 0.25f);
  REQUIRE(tiny.stages.size() == 7);
  for (int i = 0; i < 7; ++i) {
    CHECK(tiny.stages[i].channels_out ==
          round_width(full.stages[i].channels_out, 0.25f));
    CHECK(tiny.stages[i].repeats == full.stages[i].repeats);
  }
  CHECK_THROWS_AS(build_variant("B0", 0.0f), ConfigError);
  CHECK_THROWS_AS(build_variant("B0", 1.5f), ConfigError);
}

TEST_CASE("plan walker covers a scaled config") {
  const ModelPlan plan = walk_plan(build_variant("B1", 0.25f));
  CHECK(plan.total_params > 0);
  CHECK(!plan.params.empty());
  // first and last entries bracket the network
  CHECK(plan.params.front().name == "stem.conv.weight");
  CHECK(plan.params.back().name == "classifier.bias");
  // resolution flow: B1 at 240 ends at 8x8 before pooling
  const PlanActivation& head = plan.activations[plan.activations.size() - 2];
  CHECK(head.after == "head");
  CHECK(head.height == 8);
  CHECK(head.width == 8);
}

TEST_CASE("parameter count is non-decreasing in phi") {
  long long previous = -1;
  for (float phi : {0.0f, 0.5f, 1.0f, 2.0f}) {
    ScalingConfig cfg;
    cfg.phi = phi;
    const ModelPlan plan = walk_plan(build_custom(cfg));
    CHECK(plan.total_params >= previous);
    previous = plan.total_params;
  }
}

TEST_CASE("batch size lookup is defined for the whole family") {
  int previous = 1 << 20;
  for (const std::string name : {"B0", "B1", "B2", "B3", "B4", "B5", "B6", "B7"}) {
    const int bs = default_batch_size(name);
    CHECK(bs >= 2);
    CHECK(bs % 2 == 0);
    CHECK(bs <= previous);  // larger models, smaller batches
    previous = bs;
  }
  CHECK_THROWS_AS(default_batch_size("Z1"), ConfigError);
}
