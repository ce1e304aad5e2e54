#include "wirepipe/io.hpp"

#include "wirepipe/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace wirepipe;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() : path(std::filesystem::temp_directory_path() / "wirepipe_io_test") {
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

ImageBuf random_img(int h, int w, int c, std::uint64_t seed) {
  Rng rng(seed);
  ImageBuf img(h, w, c);
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img.at(y, x, ci) = static_cast<float>(rng.uniform01());
  return img;
}

}  // namespace

TEST_CASE("png: 8- and 16-bit round trips within quantization") {
  TempDir dir;
  for (const int depth : {8, 16}) {
    for (const int channels : {1, 3}) {
      const ImageBuf img = random_img(21, 17, channels, 100 + depth + channels);
      const auto path = dir.path / ("img_" + std::to_string(depth) + "_" +
                                    std::to_string(channels) + ".png");
      write_png(path, img, depth);
      const ImageBuf back = read_png(path);
      REQUIRE(back.channels() == channels);
      REQUIRE(back.height() == 21);
      REQUIRE(back.width() == 17);
      const float step = depth == 8 ? 1.0f / 255.0f : 1.0f / 65535.0f;
      for (int c = 0; c < channels; ++c)
        CHECK((img.plane(c) - back.plane(c)).abs().maxCoeff() <= 0.5f * step + 1e-7f);
    }
  }
}

TEST_CASE("png: 16-bit values survive exactly on the quantization lattice") {
  TempDir dir;
  ImageBuf img(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.at(y, x, 0) = static_cast<float>(y * 4 + x) * 257.0f / 65535.0f;
  const auto path = dir.path / "lattice.png";
  write_png(path, img, 16);
  const ImageBuf back = read_png(path);
  CHECK((img.plane(0) == back.plane(0)).all());
}

TEST_CASE("mask png: 0/255 convention") {
  TempDir dir;
  MaskBuf m(9, 9);
  m.set(4, 4, 1);
  m.set(0, 8, 1);
  const auto path = dir.path / "mask.png";
  write_mask_png(path, m);

  const ImageBuf raw = read_png(path);
  CHECK(raw.at(4, 4, 0) == 1.0f);  // stored as 255
  CHECK(raw.at(0, 0, 0) == 0.0f);

  const MaskBuf back = read_mask_png(path);
  CHECK((back.data() == m.data()).all());
}

TEST_CASE("pfm: bit-exact float round trip") {
  TempDir dir;
  for (const int channels : {1, 3}) {
    const ImageBuf img = random_img(13, 19, channels, 7 + channels);
    const auto path = dir.path / ("f" + std::to_string(channels) + ".pfm");
    write_pfm(path, img);
    const ImageBuf back = read_pfm(path);
    REQUIRE(back.channels() == channels);
    for (int c = 0; c < channels; ++c) CHECK((img.plane(c) == back.plane(c)).all());
  }
}

TEST_CASE("prob pfm: wire plane with complementary background") {
  TempDir dir;
  ProbMap p(6, 6, 2);
  Rng rng(50);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) {
      const float v = static_cast<float>(rng.uniform01());
      p.plane(kWireClass)(y, x) = v;
      p.plane(kBackgroundClass)(y, x) = 1.0f - v;
    }
  const auto path = dir.path / "prob.pfm";
  write_prob_pfm(path, p);
  const ProbMap back = read_prob_pfm(path);
  CHECK((back.plane(kWireClass) == p.plane(kWireClass)).all());
  validate_probmap(back);
}

TEST_CASE("io errors: missing files and bad inputs") {
  TempDir dir;
  CHECK_THROWS_AS(read_png(dir.path / "absent.png"), std::runtime_error);
  CHECK_THROWS_AS(read_pfm(dir.path / "absent.pfm"), std::runtime_error);
  const ImageBuf img = random_img(4, 4, 3, 1);
  CHECK_THROWS_AS(write_png(dir.path / "bad.png", img, 12), std::invalid_argument);
  ImageBuf logits(2, 2, 2, 0.0f);
  logits.at(0, 0, 0) = 5.0f;  // out of [0,1]
  CHECK_THROWS_AS(write_png(dir.path / "oob.png", ImageBuf(2, 2, 2, 0.5f), 8),
                  std::invalid_argument);
}
