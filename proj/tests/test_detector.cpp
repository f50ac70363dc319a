#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>

#include "facefake/blob_scorer.hpp"
#include "facefake/detector.hpp"

using namespace facefake;

namespace {

ImageBuffer dark_frame(int h, int w, float level = 20.0f) {
  ImageBuffer img(h, w, 3);
  img.data.setConstant(level);
  return img;
}

void paint_square(ImageBuffer& img, int x, int y, int side, float level = 230.0f) {
  for (int yy = y; yy < y + side; ++yy) {
    for (int xx = x; xx < x + side; ++xx) {
      for (int c = 0; c < 3; ++c) img.at(yy, xx, c) = level;
    }
  }
}

struct NullScorer : StageScorer {
  int input_;
  explicit NullScorer(int input) : input_(input) {}
  int input_size() const override { return input_; }
  StageScore score(const ImageBuffer&) const override { return {}; }
};

// Exhaustive proposal scan with the same scorer: every window at every
// pyramid scale, regressed, then clustered by overlap. The cluster count is
// the number of distinct objects the scorer can see.
int oracle_cluster_count(const ImageBuffer& frame, const StageScorer& scorer,
                         const CascadeConfig& config) {
  const int input = config.pyramid.stage1_input;
  std::vector<BoundingBox> fired;
  for (float scale : build_pyramid(frame.height, frame.width, config.pyramid)) {
    const int sh = std::max(input, static_cast<int>(std::round(frame.height * scale)));
    const int sw = std::max(input, static_cast<int>(std::round(frame.width * scale)));
    const ImageBuffer scaled = resize_bilinear(frame, sh, sw);
    for (int r = 0; r + input <= sh; r += 2) {
      for (int c = 0; c + input <= sw; c += 2) {
        const StageScore s = scorer.score(crop_rect(scaled, c, r, c + input, r + input));
        if (s.p_face < config.stage_thresholds[0]) continue;
        BoundingBox window{c / scale, r / scale, (c + input) / scale,
                           (r + input) / scale, s.p_face};
        try {
          fired.push_back(apply_box_regression(window, s.box_offsets));
        } catch (const DegenerateBoxError&) {
        }
      }
    }
  }
  // union-find over overlapping boxes
  std::vector<int> parent(fired.size());
  for (size_t i = 0; i < fired.size(); ++i) parent[i] = static_cast<int>(i);
  std::function<int(int)> find = [&](int i) {
    return parent[i] == i ? i : parent[i] = find(parent[i]);
  };
  for (size_t i = 0; i < fired.size(); ++i) {
    for (size_t j = i + 1; j < fired.size(); ++j) {
      if (iou(fired[i], fired[j], IouMode::kUnion) > 0.3f) {
        parent[find(static_cast<int>(i))] = find(static_cast<int>(j));
      }
    }
  }
  int clusters = 0;
  for (size_t i = 0; i < fired.size(); ++i) {
    if (find(static_cast<int>(i)) == static_cast<int>(i)) ++clusters;
  }
  return clusters;
}

}  // namespace

TEST_CASE("pyramid boundary case: frame equals stage input") {
  PyramidSpec spec;
  spec.min_face_size = 12;
  const auto scales = build_pyramid(12, 12, spec);
  REQUIRE(scales.size() == 1);
  CHECK(scales[0] == doctest::Approx(1.0));
}

TEST_CASE("pyramid recurrence on a 100x100 frame") {
  PyramidSpec spec;  // defaults 20 / 0.709 / 12
  const auto scales = build_pyramid(100, 100, spec);
  REQUIRE(scales.size() == 5);
  const double expected[5] = {0.6, 0.4254, 0.30161, 0.21384, 0.15161};
  for (int i = 0; i < 5; ++i) {
    CHECK(scales[i] == doctest::Approx(expected[i]).epsilon(1e-4));
  }
}

TEST_CASE("pyramid rejects frames below the stage input") {
  PyramidSpec spec;
  CHECK_THROWS_AS(build_pyramid(10, 500, spec), EmptyPyramidError);
}

TEST_CASE("dynamic resize caps the long side") {
  ImageBuffer small = dark_frame(480, 640);
  auto [same, s1] = dynamic_resize(small, 640);
  CHECK(s1 == 1.0f);
  CHECK(same.width == 640);

  ImageBuffer wide = dark_frame(1080, 1920);
  auto [shrunk, s2] = dynamic_resize(wide, 640);
  CHECK(s2 == doctest::Approx(1.0 / 3.0));
  CHECK(shrunk.width == 640);
  CHECK(shrunk.height == 360);

  ImageBuffer tall = dark_frame(1920, 1080);
  auto [shrunk2, s3] = dynamic_resize(tall, 640);
  CHECK(s3 == doctest::Approx(1.0 / 3.0));
  CHECK(shrunk2.width == 360);
  CHECK(shrunk2.height == 640);
}

TEST_CASE("all-zero scorers find nothing") {
  ImageBuffer frame = dark_frame(100, 100);
  paint_square(frame, 30, 30, 40);
  NullScorer s1(12), s2(24), s3(48);
  CHECK(detect_faces(frame, s1, s2, s3, {}).empty());
}

TEST_CASE("single bright square yields exactly one detection") {
  std::mt19937 rng(1234);
  std::uniform_int_distribution<int> pos(10, 150);
  const BrightBlobScorer s1(12, false), s2(24, false), s3(48, true);
  CascadeConfig config;

  for (int trial = 0; trial < 30; ++trial) {
    ImageBuffer frame = dark_frame(200, 200);
    const int x = pos(rng), y = pos(rng);
    paint_square(frame, x, y, 40);
    const BoundingBox truth{static_cast<float>(x), static_cast<float>(y),
                            static_cast<float>(x + 40), static_cast<float>(y + 40),
                            1.0f};

    CascadeTrace trace;
    const auto dets = detect_faces(frame, s1, s2, s3, config, &trace);
    REQUIRE(dets.size() == 1);
    CHECK(iou(dets[0].box, truth, IouMode::kUnion) >= 0.6f);
    CHECK(oracle_cluster_count(frame, s1, config) == 1);
    CHECK(trace.candidates_after_stage[1] <= trace.candidates_after_stage[0]);
    CHECK(trace.candidates_after_stage[2] <= trace.candidates_after_stage[1]);
  }
}

TEST_CASE("two disjoint squares yield exactly two detections") {
  const BrightBlobScorer s1(12, false), s2(24, false), s3(48, true);
  CascadeConfig config;
  std::mt19937 rng(77);
  std::uniform_int_distribution<int> jitter(0, 20);

  for (int trial = 0; trial < 10; ++trial) {
    ImageBuffer frame = dark_frame(200, 200);
    const int x1 = 15 + jitter(rng), y1 = 15 + jitter(rng);
    const int x2 = 130 + jitter(rng), y2 = 130 + jitter(rng);
    paint_square(frame, x1, y1, 40);
    paint_square(frame, x2, y2, 40);

    const auto dets = detect_faces(frame, s1, s2, s3, config);
    REQUIRE(dets.size() == 2);
    const BoundingBox a{static_cast<float>(x1), static_cast<float>(y1),
                        static_cast<float>(x1 + 40), static_cast<float>(y1 + 40), 1.0f};
    const BoundingBox b{static_cast<float>(x2), static_cast<float>(y2),
                        static_cast<float>(x2 + 40), static_cast<float>(y2 + 40), 1.0f};
    float best_a = 0, best_b = 0;
    for (const Detection& d : dets) {
      best_a = std::max(best_a, iou(d.box, a, IouMode::kUnion));
      best_b = std::max(best_b, iou(d.box, b, IouMode::kUnion));
    }
    CHECK(best_a >= 0.6f);
    CHECK(best_b >= 0.6f);
    CHECK(oracle_cluster_count(frame, s1, config) == 2);
  }
}

TEST_CASE("landmarks stay inside the frame") {
  const BrightBlobScorer s1(12, false), s2(24, false), s3(48, true);
  CascadeConfig config;
  ImageBuffer frame = dark_frame(200, 160);
  paint_square(frame, 110, 150, 40);  // clipped at the bottom edge
  const auto dets = detect_faces(frame, s1, s2, s3, config);
  for (const Detection& d : dets) {
    for (const auto& p : d.landmarks.points()) {
      CHECK(p.x() >= 0);
      CHECK(p.x() < frame.width);
      CHECK(p.y() >= 0);
      CHECK(p.y() < frame.height);
    }
  }
}

TEST_CASE("coordinate equivariance under pre-scaling") {
  const BrightBlobScorer s1(12, false), s2(24, false), s3(48, true);
  CascadeConfig capped;
  capped.detector_input_cap = 200;

  ImageBuffer frame = dark_frame(400, 400);
  paint_square(frame, 120, 170, 80);

  // route 1: cascade applies its own dynamic resize (400 -> 200)
  const auto via_cap = detect_faces(frame, s1, s2, s3, capped);

  // route 2: manually downscale by the same factor, then rescale outputs
  CascadeConfig uncapped;
  uncapped.detector_input_cap = 10000;
  const ImageBuffer half = resize_bilinear(frame, 200, 200);
  auto manual = detect_faces(half, s1, s2, s3, uncapped);

  REQUIRE(via_cap.size() == manual.size());
  REQUIRE(via_cap.size() == 1);
  for (size_t i = 0; i < manual.size(); ++i) {
    CHECK(std::abs(manual[i].box.x1 * 2 - via_cap[i].box.x1) <= 2.0f);
    CHECK(std::abs(manual[i].box.y1 * 2 - via_cap[i].box.y1) <= 2.0f);
    CHECK(std::abs(manual[i].box.x2 * 2 - via_cap[i].box.x2) <= 2.0f);
    CHECK(std::abs(manual[i].box.y2 * 2 - via_cap[i].box.y2) <= 2.0f);
  }
}

TEST_CASE("detection JSON round trip") {
  VideoDetections dets;
  Detection d;
  d.box = {10.5f, 20.25f, 50.0f, 61.5f, 0.9f};
  std::array<Eigen::Vector2f, 5> pts;
  for (int k = 0; k < 5; ++k) pts[k] = Eigen::Vector2f(11.0f + k, 21.0f + k);
  d.landmarks = Landmarks::from_points(pts);
  dets[3] = {d};

  const auto path = std::filesystem::temp_directory_path() / "ff_dets.json";
  save_detections("00_real_0000", dets, path);
  const auto [vid, back] = load_detections(path);
  CHECK(vid == "00_real_0000");
  REQUIRE(back.count(3) == 1);
  REQUIRE(back.at(3).size() == 1);
  CHECK(back.at(3)[0].box.x1 == doctest::Approx(10.5f));
  CHECK(back.at(3)[0].box.confidence == doctest::Approx(0.9f));
  CHECK(back.at(3)[0].landmarks.nose.x() == doctest::Approx(13.0f));
}
