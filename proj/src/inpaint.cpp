#include "wirepipe/inpaint.hpp"

#include "wirepipe/image_ops.hpp"
#include "wirepipe/parallel.hpp"
#include "wirepipe/tiling.hpp"

#include <cmath>
#include <unordered_map>
#include <vector>

namespace wirepipe {

DiffusionFillResult diffusion_fill(const ImageBuf& patch, const MaskBuf& mask, int iters,
                                   float tol) {
  if (patch.height() != mask.height() || patch.width() != mask.width())
    throw std::invalid_argument("diffusion_fill: mask dims mismatch");
  if (patch.channels() != 3) throw std::invalid_argument("diffusion_fill: expected 3 channels");
  if (iters < 1) throw std::invalid_argument("diffusion_fill: iters must be >= 1");

  DiffusionFillResult out;
  out.image = patch;
  const int h = patch.height(), w = patch.width();

  std::vector<std::pair<int, int>> holes;
  holes.reserve(static_cast<std::size_t>(mask.count_ones()));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (mask.at(y, x)) holes.emplace_back(y, x);
  if (holes.empty()) return out;

  if (static_cast<std::int64_t>(holes.size()) == static_cast<std::int64_t>(h) * w) {
    // No Dirichlet boundary at all.
    for (int c = 0; c < 3; ++c) out.image.plane(c).setConstant(patch.plane(c).mean());
    out.degenerate = true;
    return out;
  }

  // Seed holes with the patch mean so large regions start near plausible values.
  for (int c = 0; c < 3; ++c) {
    const float mean = patch.plane(c).mean();
    Plane& pl = out.image.plane(c);
    for (const auto& [y, x] : holes) pl(y, x) = mean;
  }

  for (int c = 0; c < 3; ++c) {
    Plane& pl = out.image.plane(c);
    int it = 0;
    for (; it < iters; ++it) {
      float max_change = 0.0f;
      for (const auto& [y, x] : holes) {
        float sum = 0.0f;
        int n = 0;
        if (y > 0) sum += pl(y - 1, x), ++n;
        if (y + 1 < h) sum += pl(y + 1, x), ++n;
        if (x > 0) sum += pl(y, x - 1), ++n;
        if (x + 1 < w) sum += pl(y, x + 1), ++n;
        if (n == 0) continue;  // 1x1 patch fully masked is handled above
        const float v = sum / static_cast<float>(n);
        max_change = std::max(max_change, std::abs(v - pl(y, x)));
        pl(y, x) = v;
      }
      if (max_change < tol) {
        ++it;
        break;
      }
    }
    out.iterations = std::max(out.iterations, it);
    pl = pl.min(1.0f).max(0.0f);
  }
  return out;
}

ColorBias color_bias(const ImageBuf& x, const ImageBuf& y, const MaskBuf& mask, int d) {
  if (!x.same_shape(y) || x.height() != mask.height() || x.width() != mask.width())
    throw std::invalid_argument("color_bias: shape mismatch");
  if (x.channels() != 3) throw std::invalid_argument("color_bias: expected 3 channels");
  const MaskBuf ring = onion_ring(mask, d);
  ColorBias out;
  const std::int64_t n = ring.count_ones();
  if (n == 0) return out;
  const auto sel = ring.data() == 1;
  for (int c = 0; c < 3; ++c) {
    const double diff =
        sel.select(x.plane(c) - y.plane(c), Plane::Zero(x.height(), x.width())).cast<double>().sum();
    out.bias[static_cast<std::size_t>(c)] = diff / static_cast<double>(n);
  }
  return out;
}

ImageBuf apply_bias_and_composite(const ImageBuf& x, const ImageBuf& y, const MaskBuf& mask,
                                  const ColorBias& bias) {
  if (!x.same_shape(y) || x.height() != mask.height() || x.width() != mask.width())
    throw std::invalid_argument("apply_bias_and_composite: shape mismatch");
  ImageBuf out = x;
  const int h = x.height(), w = x.width();
  for (int c = 0; c < x.channels(); ++c) {
    const float b = static_cast<float>(bias.bias[static_cast<std::size_t>(c)]);
    Plane& pl = out.plane(c);
    const Plane& src = y.plane(c);
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx)
        if (mask.at(yy, xx)) pl(yy, xx) = std::clamp(src(yy, xx) + b, 0.0f, 1.0f);
  }
  return out;
}

TileInpaintResult tile_inpaint(const ImageBuf& img, const MaskBuf& mask, const Inpainter& inpainter,
                               int tile, int overlap, int onion_d, int threads) {
  if (img.height() != mask.height() || img.width() != mask.width())
    throw std::invalid_argument("tile_inpaint: mask dims mismatch");
  if (overlap < 0 || overlap >= tile)
    throw std::invalid_argument("tile_inpaint: overlap must be in [0, tile)");

  const std::vector<WindowSpec> tiles =
      gen_windows(img.height(), img.width(), tile, tile - overlap);

  TileInpaintResult out;
  out.image = img;
  out.tiles_total = static_cast<int>(tiles.size());

  std::vector<int> active;
  for (int i = 0; i < static_cast<int>(tiles.size()); ++i)
    if (wire_fraction(mask, tiles[static_cast<std::size_t>(i)]) > 0.0) active.push_back(i);
  out.tiles_processed = static_cast<int>(active.size());
  if (active.empty()) return out;

  std::vector<ImageBuf> results(active.size());
  parallel_for(active.size(), threads, [&](std::size_t i) {
    const WindowSpec& win = tiles[static_cast<std::size_t>(active[i])];
    const ImageBuf patch = extract_patch(img, win);
    const MaskBuf patch_mask = extract_mask(mask, win);
    try {
      const ImageBuf filled = inpainter.fill(patch, patch_mask);
      const ColorBias bias = color_bias(patch, filled, patch_mask, onion_d);
      results[i] = apply_bias_and_composite(patch, filled, patch_mask, bias);
    } catch (const std::exception& e) {
      throw std::runtime_error("tile_inpaint: tile at (" + std::to_string(win.x) + "," +
                               std::to_string(win.y) + ") failed: " + e.what());
    }
  });

  // Masked pixels take the average of all composited tiles covering them;
  // keyed sparse accumulation since wire masks cover few pixels.
  struct Accum {
    double sum[3] = {0.0, 0.0, 0.0};
    int n = 0;
  };
  std::unordered_map<std::int64_t, Accum> blend;
  const int w = img.width();
  for (std::size_t i = 0; i < active.size(); ++i) {
    const WindowSpec& win = tiles[static_cast<std::size_t>(active[i])];
    const ImageBuf& comp = results[i];
    for (int yy = 0; yy < win.h; ++yy)
      for (int xx = 0; xx < win.w; ++xx) {
        if (!mask.at(win.y + yy, win.x + xx)) continue;
        Accum& a = blend[static_cast<std::int64_t>(win.y + yy) * w + (win.x + xx)];
        for (int c = 0; c < 3; ++c) a.sum[c] += comp.at(yy, xx, c);
        ++a.n;
      }
  }
  for (const auto& [key, a] : blend) {
    const int y = static_cast<int>(key / w), x = static_cast<int>(key % w);
    for (int c = 0; c < 3; ++c)
      out.image.at(y, x, c) = static_cast<float>(a.sum[c] / a.n);
  }
  return out;
}

}  // namespace wirepipe
