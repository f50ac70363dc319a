#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "facefake/image.hpp"
#include "facefake/png_io.hpp"

using namespace facefake;

namespace {

ImageBuffer random_image(std::mt19937& rng, int h, int w, int c) {
  ImageBuffer img(h, w, c);
  std::uniform_int_distribution<int> v(0, 255);
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    img.data[i] = static_cast<float>(v(rng));
  }
  return img;
}

}  // namespace

TEST_CASE("normalization round trip stays within half a quantization step") {
  std::mt19937 rng(3);
  const ImageBuffer img = random_image(rng, 13, 17, 3);
  const ImageBuffer back = denormalize(normalize(img));
  CHECK(back.normalized == false);
  const float max_err = (back.data - img.data).abs().maxCoeff();
  CHECK(max_err <= 1.0f / 510.0f);
}

TEST_CASE("invariant checks reject malformed buffers") {
  ImageBuffer img(4, 4, 3);
  CHECK_NOTHROW(check_image(img));
  img.data[0] = 300.0f;
  CHECK_THROWS_AS(check_image(img), DataError);
  img.data[0] = 0.0f;
  img.channels = 2;
  CHECK_THROWS_AS(check_image(img), DataError);
}

TEST_CASE("luma conversion weights") {
  ImageBuffer img(1, 1, 3);
  img.at(0, 0, 0) = 100;
  img.at(0, 0, 1) = 200;
  img.at(0, 0, 2) = 50;
  const ImageBuffer g = to_gray(img);
  CHECK(g.channels == 1);
  CHECK(g.at(0, 0, 0) == doctest::Approx(0.299 * 100 + 0.587 * 200 + 0.114 * 50));
}

TEST_CASE("bilinear resize preserves constant images") {
  ImageBuffer img(10, 20, 3);
  img.data.setConstant(137.0f);
  const ImageBuffer out = resize_bilinear(img, 7, 13);
  CHECK(out.height == 7);
  CHECK(out.width == 13);
  CHECK((out.data - 137.0f).abs().maxCoeff() < 1e-4f);
}

TEST_CASE("crop_rect zero-pads outside the source") {
  ImageBuffer img(4, 4, 1);
  img.data.setConstant(9.0f);
  const ImageBuffer out = crop_rect(img, -2, -2, 2, 2);
  CHECK(out.height == 4);
  CHECK(out.width == 4);
  CHECK(out.at(0, 0, 0) == 0.0f);   // outside
  CHECK(out.at(3, 3, 0) == 9.0f);   // source (1,1)
}

TEST_CASE("png round trip is exact for 8-bit data") {
  std::mt19937 rng(11);
  const auto dir = std::filesystem::temp_directory_path() / "ff_png_test";
  std::filesystem::create_directories(dir);

  for (int channels : {1, 3}) {
    const ImageBuffer img = random_image(rng, 21, 33, channels);
    const auto path = dir / ("roundtrip_" + std::to_string(channels) + ".png");
    write_png(img, path);
    const ImageBuffer back = read_png(path);
    REQUIRE(back.height == img.height);
    REQUIRE(back.width == img.width);
    REQUIRE(back.channels == img.channels);
    CHECK((back.data - img.data).abs().maxCoeff() == 0.0f);
  }
}

TEST_CASE("png writes are byte-identical across runs") {
  std::mt19937 rng(13);
  const ImageBuffer img = random_image(rng, 32, 32, 3);
  const auto dir = std::filesystem::temp_directory_path() / "ff_png_test";
  std::filesystem::create_directories(dir);
  write_png(img, dir / "a.png");
  write_png(img, dir / "b.png");
  std::ifstream a(dir / "a.png", std::ios::binary);
  std::ifstream b(dir / "b.png", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
  CHECK(!sa.empty());
}
