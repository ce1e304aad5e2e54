#pragma once

#include "wirepipe/dataset.hpp"
#include "wirepipe/model.hpp"
#include "wirepipe/pipeline.hpp"

#include <functional>

namespace wirepipe {

struct TrainConfig {
  int iters = 2000;
  double lr = 0.01;
  double momentum = 0.9;
  double lambda = 1.0;
  int patch = 256;        ///< training crop size p
  double min_frac = 0.01; ///< minimum wire fraction of a local crop
  int batch = 1;
  std::uint64_t seed = 0;
  int minmax_kernel = 6;
  bool augment = true;
  bool poly_lr = false;   ///< optional poly schedule, power 0.9
  double poly_power = 0.9;
};

struct TrainHistory {
  std::vector<LossReport> losses;  ///< one per step
};

/// In-memory training scene.
struct TrainScene {
  ImageBuf image;
  MaskBuf mask;
};

/// Assembles one training sample from a scene: a >= min_frac local crop plus
/// the downsampled global pair, both augmented; the fine branch's condition
/// channel is the model's own upsampled coarse prediction cropped at the
/// window (computed with gradients stopped).
TrainSample make_train_sample(const TrainScene& scene, const TinySegmenter& model,
                              const TrainConfig& cfg, Rng& rng);

/// Momentum-SGD training loop, deterministic for a fixed seed.
TrainHistory train_tiny(TinySegmenter& model, const std::vector<TrainScene>& scenes,
                        const TrainConfig& cfg,
                        const std::function<void(int, const LossReport&)>& on_step = {});

}  // namespace wirepipe
