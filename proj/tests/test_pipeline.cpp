#include "wirepipe/pipeline.hpp"

#include "wirepipe/dataset.hpp"
#include "wirepipe/eval.hpp"
#include "wirepipe/image_ops.hpp"

#include <doctest.h>

using namespace wirepipe;

namespace {

PipelineConfig small_cfg(int p, double alpha) {
  PipelineConfig cfg;
  cfg.p_infer = p;
  cfg.alpha = alpha;
  cfg.stride = p;
  cfg.inpaint_tile = 64;
  cfg.inpaint_overlap = 8;
  cfg.onion_d = 5;
  return cfg;
}

}  // namespace

TEST_CASE("PipelineConfig: validation") {
  PipelineConfig ok;
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.effective_stride() == ok.p_infer);

  PipelineConfig bad_alpha;
  bad_alpha.alpha = 1.5;
  CHECK_THROWS_AS(bad_alpha.validate(), std::invalid_argument);

  PipelineConfig bad_overlap;
  bad_overlap.inpaint_overlap = 512;
  CHECK_THROWS_AS(bad_overlap.validate(), std::invalid_argument);

  PipelineConfig bad_stride;
  bad_stride.stride = bad_stride.p_infer + 1;
  CHECK_THROWS_AS(bad_stride.validate(), std::invalid_argument);
}

TEST_CASE("segment: oracle identity at alpha = 0") {
  const SynthScene scene = synth_scene(512, 512, 2, 4.0, 8.0, 2001);
  const OracleSegmenter oracle(scene.mask);
  const SegmentationResult r = segment(scene.image, oracle, small_cfg(128, 0.0));
  CHECK(r.windows_total == 16);
  CHECK(r.windows_refined == 16);  // alpha = 0 refines everything
  CHECK((r.mask.data() == scene.mask.data()).all());
  CHECK(iou(confusion(r.mask, scene.mask)) == 1.0);
  // The result mask is the argmax of the merged probability.
  CHECK((argmax_classes(r.prob).data() == r.mask.data()).all());
}

TEST_CASE("segment: empty coarse prediction refines nothing") {
  const SynthScene scene = synth_scene(256, 256, 1, 4.0, 6.0, 2002);
  MaskBuf empty(256, 256);
  const OracleSegmenter oracle(empty);  // all-background oracle
  const SegmentationResult r = segment(scene.image, oracle, small_cfg(64, 0.01));
  CHECK(r.windows_refined == 0);
  CHECK(r.mask.count_ones() == 0);
}

TEST_CASE("segment: gating keeps wire-window outputs and shrinks work") {
  const SynthScene scene = synth_scene(512, 512, 1, 5.0, 9.0, 2003);
  const OracleSegmenter oracle(scene.mask);

  const SegmentationResult all = segment(scene.image, oracle, small_cfg(128, 0.0));
  const SegmentationResult gated = segment(scene.image, oracle, small_cfg(128, 0.01));
  CHECK(gated.windows_refined < all.windows_refined);
  CHECK(gated.windows_refined > 0);
  CHECK(iou(confusion(all.mask, scene.mask)) == 1.0);

  // Gating only changes membership: inside windows that were accepted in the
  // gated run the merged probabilities match the alpha=0 run exactly
  // (stride == p, so windows do not overlap).
  const MaskBuf coarse_for_gate = [&] {
    const ImageBuf ds = bilinear_resize(scene.image, 128, 128);
    const ProbMap p_glo = softmax_logits(oracle.coarse_forward(assemble_coarse_input(ds)));
    return argmax_classes(bilinear_resize(p_glo, 512, 512));
  }();
  const auto windows = gen_windows(512, 512, 128, 128);
  const GateResult gate = gate_windows(windows, coarse_for_gate, 0.01);
  CHECK(static_cast<int>(gate.accepted.size()) == gated.windows_refined);
  for (const WindowSpec& win : gate.accepted)
    for (int k = 0; k < 2; ++k)
      CHECK((extract_plane(gated.prob.plane(k), win) - extract_plane(all.prob.plane(k), win))
                .abs()
                .maxCoeff() <= 1e-6f);
}

TEST_CASE("segment: image smaller than the patch collapses to one window") {
  const SynthScene scene = synth_scene(80, 100, 1, 3.0, 5.0, 2004);
  const OracleSegmenter oracle(scene.mask);
  const SegmentationResult r = segment(scene.image, oracle, small_cfg(128, 0.0));
  CHECK(r.windows_total == 1);
  CHECK((r.mask.data() == scene.mask.data()).all());
}

TEST_CASE("remove: identity outside the mask, bit-exact") {
  const SynthScene scene = synth_scene(192, 192, 1, 3.0, 5.0, 2005);
  const OracleSegmenter oracle(scene.mask);
  const DiffusionInpainter inpainter;
  PipelineConfig cfg = small_cfg(64, 0.0);

  RemoveStats stats;
  const ImageBuf out = remove(scene.image, oracle, inpainter, cfg, &stats);
  CHECK(stats.tiles_processed > 0);
  int changed_outside = 0;
  for (int y = 0; y < 192; ++y)
    for (int x = 0; x < 192; ++x)
      if (!stats.seg.mask.at(y, x))
        for (int c = 0; c < 3; ++c)
          changed_outside += out.at(y, x, c) != scene.image.at(y, x, c);
  CHECK(changed_outside == 0);

  // Empty predicted mask: output equals input everywhere, zero tiles.
  MaskBuf empty(192, 192);
  const OracleSegmenter clean(empty);
  RemoveStats stats2;
  const ImageBuf same = remove(scene.image, clean, inpainter, cfg, &stats2);
  CHECK(stats2.tiles_processed == 0);
  for (int c = 0; c < 3; ++c) CHECK((same.plane(c) == scene.image.plane(c)).all());
}

TEST_CASE("remove: constant sky stays constant; wires-on-gradient gains PSNR") {
  // Constant-sky scene with an oracle mask: output constant within 1/255.
  ImageBuf sky(160, 160, 3, 0.55f);
  MaskBuf wires(160, 160);
  for (int x = 0; x < 160; ++x) wires.set(60 + x / 10, x, 1);
  ImageBuf sky_with_wire = sky;
  for (int y = 0; y < 160; ++y)
    for (int x = 0; x < 160; ++x)
      if (wires.at(y, x))
        for (int c = 0; c < 3; ++c) sky_with_wire.at(y, x, c) = 0.05f;

  const OracleSegmenter oracle(wires);
  const DiffusionInpainter inpainter;
  const ImageBuf removed = remove(sky_with_wire, oracle, inpainter, small_cfg(64, 0.0));
  for (int c = 0; c < 3; ++c)
    CHECK((removed.plane(c) - 0.55f).abs().maxCoeff() <= 1.0f / 255.0f);

  // Synthetic wire on a gradient: removal beats leaving the wires in place.
  const SynthScene scene = synth_scene(192, 192, 2, 3.0, 6.0, 2006);
  ImageBuf clean = scene.image;  // reconstruct the clean plate: re-render without wires
  SynthParams no_wires = scene.params;
  no_wires.n_wires = 0;
  clean = synth_scene(no_wires).image;
  const OracleSegmenter oracle2(scene.mask);
  const ImageBuf removed2 = remove(scene.image, oracle2, inpainter, small_cfg(64, 0.0));
  CHECK(psnr(removed2, clean) > psnr(scene.image, clean));
}

TEST_CASE("profile: stats and gating monotonicity") {
  const SynthScene scene = synth_scene(256, 256, 1, 6.0, 9.0, 2007);
  const OracleSegmenter oracle(scene.mask);

  const ProfileReport single = profile({scene.image}, oracle, small_cfg(64, 0.0));
  REQUIRE(single.per_image.size() == 1);
  CHECK(single.avg_s == single.min_s);
  CHECK(single.avg_s == single.max_s);

  std::vector<ImageBuf> imgs{scene.image};
  long prev = -1;
  for (const double alpha : {0.0, 0.01, 0.02, 0.05, 0.1}) {
    const ProfileReport rep = profile(imgs, oracle, small_cfg(64, alpha));
    if (prev >= 0) CHECK(rep.windows_refined <= prev);
    prev = rep.windows_refined;
  }

  // Empty-mask images: zero refined windows for alpha > 0.
  MaskBuf empty(256, 256);
  const OracleSegmenter clean(empty);
  const ProfileReport rep = profile(imgs, clean, small_cfg(64, 0.01));
  CHECK(rep.windows_refined == 0);
}
