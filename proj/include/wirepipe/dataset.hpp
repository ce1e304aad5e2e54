#pragma once

#include "wirepipe/image.hpp"
#include "wirepipe/rng.hpp"
#include "wirepipe/tiling.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wirepipe {

/// Generation parameters for one synthetic wire scene. Wires are parabolic
/// strokes over a smooth gradient-plus-low-frequency background.
struct SynthParams {
  int height = 512;
  int width = 512;
  int n_wires = 2;
  double thickness_min = 2.0;
  double thickness_max = 6.0;
  /// Peak-to-end vertical drop of the parabola, in pixels.
  double sag_min = 10.0;
  double sag_max = 0.0;  ///< <=0 means 0.25 * min(h, w)
  /// Wires are centered inside a band of this height fraction (1 = anywhere).
  double band_fraction = 1.0;
  std::uint64_t seed = 0;
  std::string background = "gradient";
};

struct SynthScene {
  ImageBuf image;
  MaskBuf mask;
  SynthParams params;
  double wire_fraction = 0.0;
};

SynthScene synth_scene(const SynthParams& params);
SynthScene synth_scene(int h, int w, int n_wires, double thickness_min, double thickness_max,
                       std::uint64_t seed);

/// One training pair: the whole scene downsampled to p x p with its
/// max-pooled label, plus a p x p full-resolution crop with its label.
struct SamplePair {
  ImageBuf global_image;
  MaskBuf global_mask;
  ImageBuf local_image;
  MaskBuf local_mask;
  WindowSpec window;
  bool fallback = false;  ///< crop came from the centered-on-a-wire-pixel escape hatch
};

/// Draws random p x p crops until the wire fraction reaches min_frac; after
/// max_tries the crop is centered on a uniformly chosen wire pixel instead.
/// Throws if the scene mask is empty.
SamplePair sample_patch(const ImageBuf& image, const MaskBuf& mask, int p, double min_frac,
                        int max_tries, Rng& rng);
SamplePair sample_patch(const SynthScene& scene, int p, double min_frac, int max_tries, Rng& rng);

struct AugmentParams {
  double scale = 1.0;
  double rot_deg = 0.0;
  bool hflip = false;
  double contrast = 1.0;    ///< multiplicative
  double brightness = 0.0;  ///< additive
};

/// Scale in [0.5, 2], rotation in [-10, 10] degrees, flip with p = 0.5,
/// brightness/contrast within +/-20%.
AugmentParams draw_augment_params(Rng& rng);

/// Applies the same geometric transform (about the raster center; bilinear
/// for images, nearest for masks) to all four rasters of the pair, then the
/// photometric jitter to the images only.
SamplePair augment(const SamplePair& pair, const AugmentParams& params);
SamplePair augment(const SamplePair& pair, Rng& rng);

/// Geometric warp helpers (exposed for the mask-drift property tests).
ImageBuf warp_image(const ImageBuf& img, const AugmentParams& params);
MaskBuf warp_mask(const MaskBuf& mask, const AugmentParams& params);

struct NonwireCrops {
  std::vector<ImageBuf> crops;
  int requested = 0;
  int failed = 0;  ///< crops that could not be placed clear of the mask
};

/// Random crops whose mask intersection is empty; up to max_tries placements
/// per crop.
NonwireCrops nonwire_crops(const ImageBuf& image, const MaskBuf& mask, int n, int size, Rng& rng,
                           int max_tries = 100);

/// Dataset manifest: one JSON record per scene {image, mask, seed, params}.
struct ManifestEntry {
  std::string image_path;
  std::string mask_path;
  SynthParams params;
};

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

}  // namespace wirepipe
