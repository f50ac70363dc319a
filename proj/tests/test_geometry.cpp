#include <doctest.h>

#include <random>

#include "facefake/geometry.hpp"

using namespace facefake;

namespace {

BoundingBox box(float x1, float y1, float x2, float y2, float conf = 0.5f) {
  return BoundingBox{x1, y1, x2, y2, conf};
}

// Reference NMS: for each box in confidence order, compare against every
// already-kept box with a plain double loop.
std::vector<BoundingBox> nms_bruteforce(std::vector<BoundingBox> boxes,
                                        float threshold, IouMode mode) {
  std::stable_sort(boxes.begin(), boxes.end(),
                   [](const BoundingBox& a, const BoundingBox& b) {
                     return a.confidence > b.confidence;
                   });
  std::vector<BoundingBox> kept;
  for (const BoundingBox& cand : boxes) {
    bool ok = true;
    for (const BoundingBox& k : kept) {
      if (iou(cand, k, mode) > threshold) ok = false;
    }
    if (ok) kept.push_back(cand);
  }
  return kept;
}

std::vector<BoundingBox> random_boxes(std::mt19937& rng, int max_count) {
  std::uniform_int_distribution<int> count(0, max_count);
  std::uniform_real_distribution<float> coord(0.0f, 80.0f);
  std::uniform_real_distribution<float> side(1.0f, 40.0f);
  std::uniform_real_distribution<float> conf(0.0f, 1.0f);
  std::vector<BoundingBox> out;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const float x1 = coord(rng), y1 = coord(rng);
    out.push_back(box(x1, y1, x1 + side(rng), y1 + side(rng), conf(rng)));
  }
  return out;
}

}  // namespace

TEST_CASE("iou basics") {
  const BoundingBox a = box(0, 0, 2, 2);
  CHECK(iou(a, a, IouMode::kUnion) == doctest::Approx(1.0));
  CHECK(iou(a, a, IouMode::kMin) == doctest::Approx(1.0));

  const BoundingBox far = box(10, 10, 12, 12);
  CHECK(iou(a, far, IouMode::kUnion) == 0.0f);
  CHECK(iou(a, far, IouMode::kMin) == 0.0f);

  // areas 4 and 4, intersection 1
  const BoundingBox b = box(1, 1, 3, 3);
  CHECK(iou(a, b, IouMode::kUnion) == doctest::Approx(1.0 / 7.0).epsilon(1e-6));
  CHECK(iou(a, b, IouMode::kMin) == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("nms keeps the higher-confidence duplicate") {
  std::vector<BoundingBox> boxes = {box(0, 0, 4, 4, 0.9f), box(0, 0, 4, 4, 0.8f)};
  const auto kept = nms(boxes, 0.5f, IouMode::kUnion);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].confidence == 0.9f);
}

TEST_CASE("nms on empty input") {
  CHECK(nms({}, 0.5f, IouMode::kUnion).empty());
}

TEST_CASE("nms equals the brute-force oracle") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto boxes = random_boxes(rng, 20);
    const float threshold = std::uniform_real_distribution<float>(0.1f, 0.9f)(rng);
    const IouMode mode = trial % 2 ? IouMode::kMin : IouMode::kUnion;
    const auto got = nms(boxes, threshold, mode);
    const auto want = nms_bruteforce(boxes, threshold, mode);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].x1 == want[i].x1);
      CHECK(got[i].y1 == want[i].y1);
      CHECK(got[i].x2 == want[i].x2);
      CHECK(got[i].y2 == want[i].y2);
      CHECK(got[i].confidence == want[i].confidence);
    }
  }
}

TEST_CASE("nms is idempotent") {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto boxes = random_boxes(rng, 20);
    const auto once = nms(boxes, 0.4f, IouMode::kUnion);
    const auto twice = nms(once, 0.4f, IouMode::kUnion);
    REQUIRE(once.size() == twice.size());
    for (size_t i = 0; i < once.size(); ++i) {
      CHECK(once[i].confidence == twice[i].confidence);
      CHECK(once[i].x1 == twice[i].x1);
    }
  }
}

TEST_CASE("box regression arithmetic") {
  const BoundingBox b = box(0, 0, 10, 20, 0.7f);
  const BoundingBox same = apply_box_regression(b, {0, 0, 0, 0});
  CHECK(same.x1 == 0);
  CHECK(same.y2 == 20);
  CHECK(same.confidence == 0.7f);

  const BoundingBox r = apply_box_regression(b, {0.1f, 0.1f, -0.1f, -0.1f});
  CHECK(r.x1 == doctest::Approx(1));
  CHECK(r.y1 == doctest::Approx(2));
  CHECK(r.x2 == doctest::Approx(9));
  CHECK(r.y2 == doctest::Approx(18));

  CHECK_THROWS_AS(apply_box_regression(box(0, 0, 10, 10), {0.6f, 0, -0.6f, 0}),
                  DegenerateBoxError);
}

TEST_CASE("square padding") {
  const BoundingBox sq = square_pad(box(3, 5, 7, 9));
  CHECK(sq.x1 == 3);
  CHECK(sq.y1 == 5);
  CHECK(sq.x2 == 7);
  CHECK(sq.y2 == 9);

  const BoundingBox tall = square_pad(box(0, 0, 10, 20));
  CHECK(tall.x1 == doctest::Approx(-5));
  CHECK(tall.x2 == doctest::Approx(15));
  CHECK(tall.y1 == doctest::Approx(0));
  CHECK(tall.y2 == doctest::Approx(20));

  const BoundingBox wide = square_pad(box(2, 2, 4, 8));
  CHECK(wide.x1 == doctest::Approx(0));
  CHECK(wide.x2 == doctest::Approx(6));
  CHECK(wide.y1 == doctest::Approx(2));
  CHECK(wide.y2 == doctest::Approx(8));
}
