#include "wirepipe/train.hpp"

#include "wirepipe/image_ops.hpp"

#include <cmath>
#include <stdexcept>

namespace wirepipe {

TrainSample make_train_sample(const TrainScene& scene, const TinySegmenter& model,
                              const TrainConfig& cfg, Rng& rng) {
  // Augment the whole scene first, then derive the global/local pair from
  // it; retry the draw if the transform pushed every wire pixel out of frame.
  const ImageBuf* image = &scene.image;
  const MaskBuf* mask = &scene.mask;
  ImageBuf aug_image;
  MaskBuf aug_mask;
  AugmentParams aug;
  if (cfg.augment) {
    for (int attempt = 0; attempt < 4; ++attempt) {
      aug = draw_augment_params(rng);
      aug_mask = warp_mask(scene.mask, aug);
      if (aug_mask.count_ones() > 0) break;
      aug = AugmentParams{};  // identity fallback
      aug_mask = scene.mask;
    }
    aug_image = warp_image(scene.image, aug);
    const float gain = static_cast<float>(aug.contrast);
    const float shift = static_cast<float>(aug.brightness);
    for (int c = 0; c < aug_image.channels(); ++c)
      aug_image.plane(c) = (aug_image.plane(c) * gain + shift).min(1.0f).max(0.0f);
    image = &aug_image;
    mask = &aug_mask;
  }

  SamplePair pair = sample_patch(*image, *mask, cfg.patch, cfg.min_frac, 40, rng);

  TrainSample sample;
  sample.glo_h = sample.loc_h = cfg.patch;
  sample.glo_w = sample.loc_w = cfg.patch;
  sample.g_mask = std::move(pair.global_mask);
  sample.l_mask = std::move(pair.local_mask);

  const ImageBuf in_glo = assemble_coarse_input(pair.global_image, cfg.minmax_kernel);
  sample.in_glo = pack_planes<float>(in_glo);

  // Condition channel exactly as at inference: the model's current coarse
  // prediction, upsampled to scene resolution and cropped at the window.
  // It enters the batch as data; gradients do not flow through it.
  const ProbMap p_glo = softmax_logits(model.coarse_forward(in_glo));
  const Plane p_up = bilinear_resize(p_glo.plane(kWireClass), image->height(), image->width());
  const Plane cond = extract_plane(p_up, pair.window);

  const ImageBuf in_loc = assemble_fine_input(pair.local_image, cond, cfg.minmax_kernel);
  sample.in_loc = pack_planes<float>(in_loc);
  return sample;
}

TrainHistory train_tiny(TinySegmenter& model, const std::vector<TrainScene>& scenes,
                        const TrainConfig& cfg,
                        const std::function<void(int, const LossReport&)>& on_step) {
  if (scenes.empty()) throw std::invalid_argument("train_tiny: no scenes");
  if (cfg.iters < 0 || cfg.batch < 1) throw std::invalid_argument("train_tiny: bad config");

  TrainHistory hist;
  hist.losses.reserve(static_cast<std::size_t>(cfg.iters));
  SgdState state;
  Rng order_rng(derive_seed(cfg.seed, 0xA11CE));

  for (int step = 0; step < cfg.iters; ++step) {
    std::vector<TrainSample> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch));
    for (int b = 0; b < cfg.batch; ++b) {
      const std::size_t idx = static_cast<std::size_t>(
          order_rng.uniform_int(static_cast<std::int64_t>(scenes.size())));
      Rng sample_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(step) * 1000003ULL + b));
      batch.push_back(make_train_sample(scenes[idx], model, cfg, sample_rng));
    }
    double lr = cfg.lr;
    if (cfg.poly_lr)
      lr *= std::pow(1.0 - static_cast<double>(step) / std::max(1, cfg.iters), cfg.poly_power);
    const LossReport r = sgd_step(model, batch, lr, cfg.momentum, cfg.lambda, state);
    hist.losses.push_back(r);
    if (on_step) on_step(step, r);
  }
  return hist;
}

}  // namespace wirepipe
