#include <doctest.h>

#include <filesystem>

#include "facefake/manifest.hpp"

using namespace facefake;

namespace {

ManifestEntry entry(const std::string& path, const std::string& vid, int frame,
                    Label label, const std::string& original = "") {
  ManifestEntry e;
  e.crop_path = path;
  e.video_id = vid;
  e.frame_index = frame;
  e.label = label;
  e.original_video_id = original;
  return e;
}

}  // namespace

TEST_CASE("empty manifest validates vacuously") {
  CHECK(validate_manifest({}).empty());
}

TEST_CASE("duplicate crop paths are flagged") {
  DatasetManifest m;
  m.entries.push_back(entry("a.png", "00_real_0000", 0, Label::kReal));
  m.entries.push_back(entry("a.png", "00_real_0000", 1, Label::kReal));
  const auto violations = validate_manifest(m);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].code == "duplicate_crop_path");
}

TEST_CASE("fake entries must reference an existing real video") {
  DatasetManifest m;
  for (int i = 0; i < 4; ++i) {
    m.entries.push_back(entry("r" + std::to_string(i) + ".png", "00_real_0000",
                              i, Label::kReal));
  }
  for (int i = 0; i < 5; ++i) {
    m.entries.push_back(entry("f" + std::to_string(i) + ".png", "00_fake_0000",
                              i, Label::kFake, "00_real_0000"));
  }
  m.entries.push_back(
      entry("bad.png", "00_fake_0001", 0, Label::kFake, "00_real_0099"));
  const auto violations = validate_manifest(m);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].code == "missing_original");
}

TEST_CASE("manifest JSON round trip is identity") {
  DatasetManifest m;
  m.entries.push_back(entry("crops/a/000001_0.png", "01_real_0003", 1, Label::kReal));
  m.entries.push_back(
      entry("crops/b/000002_1.png", "01_fake_0003", 2, Label::kFake, "01_real_0003"));

  const auto path = std::filesystem::temp_directory_path() / "ff_manifest.json";
  save_manifest(m, path);
  const DatasetManifest back = load_manifest(path);
  REQUIRE(back.entries.size() == m.entries.size());
  for (size_t i = 0; i < m.entries.size(); ++i) {
    CHECK(back.entries[i].crop_path == m.entries[i].crop_path);
    CHECK(back.entries[i].video_id == m.entries[i].video_id);
    CHECK(back.entries[i].frame_index == m.entries[i].frame_index);
    CHECK(back.entries[i].label == m.entries[i].label);
    CHECK(back.entries[i].original_video_id == m.entries[i].original_video_id);
  }
}

TEST_CASE("loading a missing manifest is an I/O error, not a validation result") {
  CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.json"), DataError);
}

TEST_CASE("folder ids parse from the video id prefix") {
  CHECK(folder_of("03_fake_0012") == 3);
  CHECK(folder_of("00_real_0001") == 0);
  CHECK(folder_of("17_x") == 17);
  CHECK(!folder_of("real_0001").has_value());
  CHECK(!folder_of("_x").has_value());
  CHECK(!folder_of("abc").has_value());
}
