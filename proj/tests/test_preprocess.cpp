#include <doctest.h>

#include <fstream>

#include "facefake/preprocess.hpp"
#include "facefake/png_io.hpp"
#include "facefake/synth.hpp"

using namespace facefake;

TEST_CASE("uniform frame sampling") {
  SamplingPlan plan;  // 32 frames

  const auto dense = sample_frames(300, plan);
  REQUIRE(dense.size() == 32);
  CHECK(dense.front() == 0);
  CHECK(dense.back() == 299);
  for (size_t i = 1; i < dense.size(); ++i) CHECK(dense[i] > dense[i - 1]);

  const auto short_clip = sample_frames(10, plan);
  REQUIRE(short_clip.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(short_clip[i] == i);

  CHECK(sample_frames(1, plan) == std::vector<int>{0});
  CHECK_THROWS_AS(sample_frames(0, plan), DataError);
}

TEST_CASE("sampled indices stay in range for arbitrary counts") {
  SamplingPlan plan;
  for (int count : {2, 3, 31, 32, 33, 100, 997}) {
    const auto idx = sample_frames(count, plan);
    CHECK(!idx.empty());
    CHECK(idx.front() == 0);
    CHECK(idx.back() == count - 1);
    for (size_t i = 0; i < idx.size(); ++i) {
      CHECK(idx[i] >= 0);
      CHECK(idx[i] < count);
      if (i > 0) CHECK(idx[i] > idx[i - 1]);
    }
  }
}

TEST_CASE("margin crop arithmetic") {
  ImageBuffer frame(200, 200, 3);
  frame.data.setConstant(50.0f);

  SUBCASE("zero margin equals the rounded box") {
    const FaceCrop crop =
        crop_with_margin(frame, {50, 50, 150, 150, 0.9f}, 0.0f, "v", 0);
    CHECK(crop.image.width == 100);
    CHECK(crop.image.height == 100);
  }
  SUBCASE("30 percent margin expands 15 per side") {
    const FaceCrop crop =
        crop_with_margin(frame, {50, 50, 150, 150, 0.9f}, 0.30f, "v", 0);
    CHECK(crop.image.width == 130);   // (35, 165)
    CHECK(crop.image.height == 130);
    CHECK(crop.margin_fraction == 0.30f);
    CHECK(crop.source_box.x1 == 50);
  }
  SUBCASE("clipping at the frame edge") {
    const FaceCrop crop =
        crop_with_margin(frame, {0, 0, 100, 100, 0.9f}, 0.30f, "v", 0);
    CHECK(crop.image.width == 115);   // (0, 115)
    CHECK(crop.image.height == 115);
  }
  SUBCASE("box fully outside is an error") {
    CHECK_THROWS_AS(
        crop_with_margin(frame, {300, 300, 340, 340, 0.9f}, 0.30f, "v", 0),
        DataError);
  }
}

TEST_CASE("crop never exceeds frame bounds") {
  ImageBuffer frame(57, 83, 3);
  frame.data.setConstant(10.0f);
  for (float margin : {0.0f, 0.3f, 1.0f}) {
    const FaceCrop crop =
        crop_with_margin(frame, {70, 40, 90, 60, 0.5f}, margin, "v", 0);
    CHECK(crop.image.width <= frame.width);
    CHECK(crop.image.height <= frame.height);
  }
}

namespace {

// Tiny labeled dataset: 1 real + 1 paired fake video with synthetic
// detections, enough to drive materialization end to end.
struct TinyDataset {
  std::filesystem::path root;
  std::filesystem::path detections;
  std::vector<VideoListing> listings;
};

TinyDataset make_tiny_dataset(const std::filesystem::path& base) {
  TinyDataset ds;
  ds.root = base / "videos";
  ds.detections = base / "detections";
  std::filesystem::create_directories(ds.detections);

  SynthOptions opts;
  opts.n_videos = 2;
  opts.frames_per_video = 4;
  opts.width = 96;
  opts.height = 96;
  opts.n_folders = 1;
  opts.seed = 42;
  generate_synthetic_dataset(ds.root, opts);
  ds.listings = scan_input_dir(ds.root);

  for (const VideoListing& v : ds.listings) {
    VideoDetections dets;
    for (int f = 0; f < opts.frames_per_video; ++f) {
      Detection d;
      d.box = {24, 24, 72, 72, 0.95f};
      dets[f] = {d};
    }
    save_detections(v.video_id, dets, ds.detections / (v.video_id + ".json"));
  }
  return ds;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

}  // namespace

TEST_CASE("materialization writes crops, masks and a valid manifest") {
  const auto base = std::filesystem::temp_directory_path() / "ff_materialize";
  std::filesystem::remove_all(base);
  const TinyDataset ds = make_tiny_dataset(base);
  REQUIRE(ds.listings.size() == 2);

  MaterializeOptions opts;
  const auto out_dir = base / "out";
  const MaterializeResult result =
      materialize_dataset(ds.listings, ds.detections, out_dir, opts);

  // 2 videos x 4 frames x 1 face
  CHECK(result.crops_written == 8);
  CHECK(result.masks_written == 4);  // fake side only
  CHECK(result.manifest.entries.size() == 8);
  CHECK(validate_manifest(result.manifest).empty());
  CHECK(std::filesystem::exists(out_dir / "manifest.json"));

  int fakes = 0;
  for (const ManifestEntry& e : result.manifest.entries) {
    CHECK(std::filesystem::exists(out_dir / e.crop_path));
    if (e.label == Label::kFake) {
      ++fakes;
      CHECK(!e.original_video_id.empty());
    }
  }
  CHECK(fakes == 4);

  SUBCASE("re-running materialization is byte-identical") {
    const std::string before = slurp(out_dir / "manifest.json");
    const auto first_crop = out_dir / result.manifest.entries.front().crop_path;
    const std::string crop_before = slurp(first_crop);
    materialize_dataset(ds.listings, ds.detections, out_dir, opts);
    CHECK(slurp(out_dir / "manifest.json") == before);
    CHECK(slurp(first_crop) == crop_before);
  }
}

TEST_CASE("missing detections are per-video failures, all-missing is fatal") {
  const auto base = std::filesystem::temp_directory_path() / "ff_materialize2";
  std::filesystem::remove_all(base);
  const TinyDataset ds = make_tiny_dataset(base);

  // remove the fake video's detections: its crops vanish but the run succeeds
  std::filesystem::remove(ds.detections / (ds.listings[0].video_id + ".json"));
  MaterializeOptions opts;
  const MaterializeResult result =
      materialize_dataset(ds.listings, ds.detections, base / "out2", opts);
  CHECK(result.failed_videos.size() == 1);
  CHECK(result.manifest.entries.size() == 4);

  std::filesystem::remove(ds.detections / (ds.listings[1].video_id + ".json"));
  CHECK_THROWS_AS(materialize_dataset(ds.listings, ds.detections, base / "out3", opts),
                  DataError);
}

TEST_CASE("fake without pairing skips masks with a warning") {
  const auto base = std::filesystem::temp_directory_path() / "ff_materialize3";
  std::filesystem::remove_all(base);
  TinyDataset ds = make_tiny_dataset(base);
  for (VideoListing& v : ds.listings) v.original_video_id.clear();

  MaterializeOptions opts;
  const MaterializeResult result =
      materialize_dataset(ds.listings, ds.detections, base / "out", opts);
  CHECK(result.masks_written == 0);
  CHECK(result.crops_written == 8);
  CHECK(!result.warnings.empty());
}

TEST_CASE("empty listing materializes an empty manifest") {
  const auto base = std::filesystem::temp_directory_path() / "ff_materialize4";
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base / "det");
  const MaterializeResult result =
      materialize_dataset({}, base / "det", base / "out", {});
  CHECK(result.manifest.entries.empty());
  CHECK(result.crops_written == 0);
}
