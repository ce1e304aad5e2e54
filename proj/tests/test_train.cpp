#include "wirepipe/train.hpp"

#include <doctest.h>

using namespace wirepipe;

namespace {

std::vector<TrainScene> make_scenes(int n, int size, std::uint64_t seed) {
  std::vector<TrainScene> scenes;
  for (int i = 0; i < n; ++i) {
    SynthParams p;
    p.height = p.width = size;
    p.n_wires = 2;
    p.thickness_min = 3.0;
    p.thickness_max = 7.0;
    p.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    SynthScene s = synth_scene(p);
    scenes.push_back({std::move(s.image), std::move(s.mask)});
  }
  return scenes;
}

}  // namespace

TEST_CASE("train_tiny: deterministic for a fixed seed") {
  const auto scenes = make_scenes(3, 128, 400);
  TrainConfig cfg;
  cfg.iters = 4;
  cfg.patch = 64;
  cfg.seed = 11;

  TinySegmenter a(5), b(5);
  const TrainHistory ha = train_tiny(a, scenes, cfg);
  const TrainHistory hb = train_tiny(b, scenes, cfg);
  REQUIRE(ha.losses.size() == 4);
  CHECK((a.net().parameters() - b.net().parameters()).cwiseAbs().maxCoeff() == 0.0f);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(ha.losses[i].total == doctest::Approx(hb.losses[i].total).epsilon(0));
}

TEST_CASE("train_tiny: loss trends down on a small run") {
  const auto scenes = make_scenes(4, 128, 500);
  TrainConfig cfg;
  cfg.iters = 60;
  cfg.patch = 64;
  cfg.seed = 3;
  cfg.augment = false;

  TinySegmenter model(1);
  const TrainHistory hist = train_tiny(model, scenes, cfg);
  double early = 0.0, late = 0.0;
  for (int i = 0; i < 10; ++i) early += hist.losses[static_cast<std::size_t>(i)].total;
  for (int i = 50; i < 60; ++i) late += hist.losses[static_cast<std::size_t>(i)].total;
  CHECK(late < early);
}

TEST_CASE("make_train_sample: shapes and the condition channel") {
  const auto scenes = make_scenes(1, 128, 600);
  TrainConfig cfg;
  cfg.patch = 64;
  TinySegmenter model(2);
  Rng rng(5);
  const TrainSample s = make_train_sample(scenes[0], model, cfg, rng);
  CHECK(s.in_glo.rows() == 6);
  CHECK(s.in_glo.cols() == 64 * 64);
  CHECK(s.in_loc.rows() == 6);
  CHECK(s.g_mask.height() == 64);
  CHECK(s.l_mask.height() == 64);
  CHECK(s.in_glo.allFinite());
  CHECK(s.in_loc.allFinite());
  // Coarse condition channel (row 3) is all zero; the fine one generally not.
  CHECK(s.in_glo.row(3).cwiseAbs().maxCoeff() == 0.0f);
}
