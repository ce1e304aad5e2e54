#include "wirepipe/dataset.hpp"

#include "wirepipe/image_ops.hpp"

#include <doctest.h>

#include <filesystem>

using namespace wirepipe;

TEST_CASE("synth_scene: determinism, empty case, fraction bounds") {
  SynthParams p;
  p.height = p.width = 256;
  p.n_wires = 0;
  p.seed = 9;
  const SynthScene empty = synth_scene(p);
  CHECK(empty.mask.count_ones() == 0);
  validate01(empty.image, "scene");

  p.n_wires = 2;
  const SynthScene a = synth_scene(p);
  const SynthScene b = synth_scene(p);
  CHECK((a.mask.data() == b.mask.data()).all());
  for (int c = 0; c < 3; ++c) CHECK((a.image.plane(c) == b.image.plane(c)).all());
  CHECK(a.wire_fraction > 0.0);
  CHECK(a.wire_fraction <= 0.2);

  p.seed = 10;
  const SynthScene c = synth_scene(p);
  bool differs = false;
  for (int ch = 0; ch < 3 && !differs; ++ch)
    differs = !(a.image.plane(ch) == c.image.plane(ch)).all();
  CHECK(differs);

  // Single thin wire on 512^2: fraction within the expected window.
  const SynthScene thin = synth_scene(512, 512, 1, 3.0, 3.0, 77);
  CHECK(thin.wire_fraction >= 0.001);
  CHECK(thin.wire_fraction <= 0.02);

  SynthParams bad;
  bad.height = 32;
  CHECK_THROWS_AS(synth_scene(bad), std::invalid_argument);
  SynthParams dense;
  dense.n_wires = 500;
  dense.thickness_min = dense.thickness_max = 40.0;
  CHECK_THROWS_AS(synth_scene(dense), std::invalid_argument);
}

TEST_CASE("sample_patch: constraint, fallback, and the empty-mask error") {
  const SynthScene scene = synth_scene(320, 320, 2, 4.0, 8.0, 31);
  Rng rng(5);

  for (int i = 0; i < 50; ++i) {
    const SamplePair pair = sample_patch(scene, 128, 0.01, 40, rng);
    CHECK(pair.local_image.height() == 128);
    CHECK(pair.global_image.height() == 128);
    const double frac = wire_fraction(pair.local_mask, {0, 0, 128, 128});
    if (!pair.fallback) CHECK(frac >= 0.01);
    CHECK(frac > 0.0);
    // Crop content matches the window.
    for (int c = 0; c < 3; ++c)
      CHECK(pair.local_image.at(0, 0, c) ==
            scene.image.at(pair.window.y, pair.window.x, c));
    // Global label is the max-pooled mask.
    const MaskBuf expect = maxpool_downsample_mask(scene.mask, 128, 128);
    CHECK((pair.global_mask.data() == expect.data()).all());
  }

  // Fully-wire mask accepts on the first try.
  ImageBuf img(64, 64, 3, 0.5f);
  MaskBuf full(64, 64, 1);
  Rng rng2(6);
  const SamplePair easy = sample_patch(img, full, 32, 0.01, 1, rng2);
  CHECK_FALSE(easy.fallback);

  // A single wire pixel forces the centered fallback.
  MaskBuf lonely(64, 64);
  lonely.set(50, 9, 1);
  Rng rng3(7);
  const SamplePair fb = sample_patch(img, lonely, 16, 0.5, 3, rng3);
  CHECK(fb.fallback);
  CHECK(fb.local_mask.count_ones() == 1);
  // Crop is centered on the pixel (clamped to bounds).
  CHECK(fb.window.x == 9 - 8);
  CHECK(fb.window.y == 50 - 8);

  MaskBuf none(64, 64);
  Rng rng4(8);
  CHECK_THROWS_AS(sample_patch(img, none, 16, 0.01, 3, rng4), std::runtime_error);
}

TEST_CASE("augment: identity, flip involution, 90-degree rotation oracle") {
  const SynthScene scene = synth_scene(256, 256, 2, 3.0, 6.0, 17);
  Rng rng(3);
  const SamplePair pair = sample_patch(scene, 96, 0.005, 40, rng);

  const SamplePair same = augment(pair, AugmentParams{});
  CHECK((same.local_image.plane(0) == pair.local_image.plane(0)).all());
  CHECK((same.local_mask.data() == pair.local_mask.data()).all());
  CHECK((same.global_image.plane(2) == pair.global_image.plane(2)).all());

  AugmentParams flip;
  flip.hflip = true;
  const SamplePair once = augment(pair, flip);
  bool changed = !(once.local_image.plane(0) == pair.local_image.plane(0)).all();
  CHECK(changed);
  const SamplePair twice = augment(once, flip);
  CHECK((twice.local_image.plane(0) == pair.local_image.plane(0)).all());
  CHECK((twice.local_mask.data() == pair.local_mask.data()).all());

  // Axis-aligned line rotated by 90 degrees lands on the transposed line
  // within a pixel.
  SamplePair line;
  line.local_image = ImageBuf(64, 64, 3, 0.5f);
  line.global_image = ImageBuf(64, 64, 3, 0.5f);
  line.local_mask = MaskBuf(64, 64);
  line.global_mask = MaskBuf(64, 64);
  for (int x = 8; x < 56; ++x) line.local_mask.set(30, x, 1);
  AugmentParams rot90;
  rot90.rot_deg = 90.0;
  const SamplePair turned = augment(line, rot90);
  int hits = 0, misses = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if (turned.local_mask.at(y, x)) {
        // Forward map of (30, x) under +90 degrees about the center lands at
        // column 64-1-30 = 33 (within rounding).
        if (std::abs(x - 33) <= 1)
          ++hits;
        else
          ++misses;
      }
  CHECK(hits >= 40);
  CHECK(misses == 0);

  // Mask drift: every lit pixel of the augmented mask must inverse-map into
  // the dilated (d=3) original mask. The inverse map is recomputed here from
  // the declared transform definition, independent of warp_mask.
  Rng rng2(14);
  for (int trial = 0; trial < 10; ++trial) {
    const AugmentParams params = draw_augment_params(rng2);
    const SamplePair warped = augment(pair, params);
    const MaskBuf fat = dilate(pair.local_mask, 3);
    const int n = pair.local_mask.height();
    const double cx = n / 2.0, cy = n / 2.0;
    const double ct = std::cos(-params.rot_deg * 3.14159265358979323846 / 180.0);
    const double st = std::sin(-params.rot_deg * 3.14159265358979323846 / 180.0);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        if (!warped.local_mask.at(y, x)) continue;
        const double u = x + 0.5 - cx, v = y + 0.5 - cy;
        double ur = (u * ct - v * st) / params.scale;
        const double vr = (u * st + v * ct) / params.scale;
        if (params.hflip) ur = -ur;
        const int sx = static_cast<int>(std::lround(ur + cx - 0.5));
        const int sy = static_cast<int>(std::lround(vr + cy - 0.5));
        REQUIRE(sx >= 0);
        REQUIRE(sy >= 0);
        REQUIRE(sx < n);
        REQUIRE(sy < n);
        CHECK(fat.at(sy, sx) == 1);
      }
  }
}

TEST_CASE("augment: photometric jitter stays in range and flips nothing") {
  const SynthScene scene = synth_scene(200, 200, 1, 4.0, 6.0, 23);
  Rng rng(9);
  const SamplePair pair = sample_patch(scene, 64, 0.001, 40, rng);
  AugmentParams jitter;
  jitter.contrast = 1.2;
  jitter.brightness = -0.2;
  const SamplePair out = augment(pair, jitter);
  validate01(out.local_image, "jittered");
  CHECK((out.local_mask.data() == pair.local_mask.data()).all());
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      CHECK(out.local_image.at(y, x, 0) ==
            doctest::Approx(std::clamp(pair.local_image.at(y, x, 0) * 1.2f - 0.2f, 0.0f, 1.0f))
                .epsilon(1e-5));
}

TEST_CASE("nonwire_crops: clean crops or counted failures") {
  const SynthScene scene = synth_scene(400, 400, 2, 4.0, 8.0, 41);
  Rng rng(12);
  const NonwireCrops got = nonwire_crops(scene.image, scene.mask, 6, 96, rng);
  CHECK(static_cast<int>(got.crops.size()) + got.failed == 6);
  for (const ImageBuf& crop : got.crops) {
    CHECK(crop.height() == 96);
    CHECK(crop.width() == 96);
  }

  // Empty mask: everything succeeds.
  MaskBuf none(400, 400);
  Rng rng2(13);
  const NonwireCrops all = nonwire_crops(scene.image, none, 5, 128, rng2);
  CHECK(all.crops.size() == 5);
  CHECK(all.failed == 0);

  // Fully-wire mask: nothing fits.
  MaskBuf full(400, 400, 1);
  Rng rng3(14);
  const NonwireCrops nothing = nonwire_crops(scene.image, full, 4, 64, rng3);
  CHECK(nothing.crops.empty());
  CHECK(nothing.failed == 4);
}

TEST_CASE("manifest: JSON round trip") {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "wirepipe_manifest_test";
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> entries(2);
  entries[0].image_path = "scene_00000.png";
  entries[0].mask_path = "scene_00000_mask.png";
  entries[0].params.seed = 11;
  entries[0].params.n_wires = 3;
  entries[1].image_path = "scene_00001.png";
  entries[1].mask_path = "scene_00001_mask.png";
  entries[1].params.seed = 12;
  entries[1].params.thickness_max = 9.5;

  const auto path = dir / "manifest.json";
  write_manifest(path, entries);
  const auto back = read_manifest(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].image_path == entries[0].image_path);
  CHECK(back[0].params.seed == 11);
  CHECK(back[0].params.n_wires == 3);
  CHECK(back[1].params.thickness_max == doctest::Approx(9.5));
  std::filesystem::remove_all(dir);
}
