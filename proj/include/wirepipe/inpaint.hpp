#pragma once

#include "wirepipe/image.hpp"

#include <array>

namespace wirepipe {

/// Inpainting backend contract: fills masked pixels of a 3-channel patch,
/// leaves unmasked pixels untouched, and keeps the output in [0,1].
class Inpainter {
 public:
  virtual ~Inpainter() = default;
  virtual ImageBuf fill(const ImageBuf& patch, const MaskBuf& mask) const = 0;
};

struct DiffusionFillResult {
  ImageBuf image;
  int iterations = 0;
  bool degenerate = false;  ///< no unmasked boundary existed; filled with the patch mean
};

/// Reference baseline inpainter: masked pixels relax to the discrete
/// harmonic interpolant of their unmasked 4-neighbor boundary (Gauss-Seidel
/// with fixed sweep order; stops when the max per-sweep change drops below
/// tol or after `iters` sweeps).
DiffusionFillResult diffusion_fill(const ImageBuf& patch, const MaskBuf& mask, int iters = 2000,
                                   float tol = 1e-6f);

class DiffusionInpainter : public Inpainter {
 public:
  explicit DiffusionInpainter(int iters = 2000, float tol = 1e-6f) : iters_(iters), tol_(tol) {}
  ImageBuf fill(const ImageBuf& patch, const MaskBuf& mask) const override {
    return diffusion_fill(patch, mask, iters_, tol_).image;
  }

 private:
  int iters_;
  float tol_;
};

/// Per-channel color bias between input x and inpainted y, estimated in the
/// onion ring dilate(mask, d) - mask. Zero when the ring is empty.
struct ColorBias {
  std::array<double, 3> bias{0.0, 0.0, 0.0};
};

ColorBias color_bias(const ImageBuf& x, const ImageBuf& y, const MaskBuf& mask, int d);

/// x outside the mask (bit-exact), clamp(y + bias, 0, 1) inside it.
ImageBuf apply_bias_and_composite(const ImageBuf& x, const ImageBuf& y, const MaskBuf& mask,
                                  const ColorBias& bias);

struct TileInpaintResult {
  ImageBuf image;
  int tiles_total = 0;
  int tiles_processed = 0;
};

/// Tile-based inpainting: tiles of size `tile` at stride tile - overlap,
/// border-clamped; mask-free tiles are skipped. Each processed tile runs
/// fill -> color_bias -> composite; where processed tiles overlap, masked
/// pixels take the per-pixel average of the composited results. Unmasked
/// pixels always equal the input.
TileInpaintResult tile_inpaint(const ImageBuf& img, const MaskBuf& mask, const Inpainter& inpainter,
                               int tile, int overlap, int onion_d, int threads = 0);

}  // namespace wirepipe
