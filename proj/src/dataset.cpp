#include "wirepipe/dataset.hpp"

#include "wirepipe/image_ops.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "wirepipe/io.hpp"

namespace wirepipe {

namespace {

constexpr double kPi = 3.14159265358979323846;

void validate_params(const SynthParams& p) {
  if (p.height < 64 || p.width < 64)
    throw std::invalid_argument("synth_scene: dimensions must be >= 64");
  if (p.n_wires < 0) throw std::invalid_argument("synth_scene: negative wire count");
  if (p.thickness_min <= 0.0 || p.thickness_max < p.thickness_min)
    throw std::invalid_argument("synth_scene: bad thickness range");
  if (p.band_fraction <= 0.0 || p.band_fraction > 1.0)
    throw std::invalid_argument("synth_scene: band_fraction must be in (0,1]");
  if (p.sag_min < 0.0) throw std::invalid_argument("synth_scene: negative sag");
  // Sparsity guard: a wire covers at most ~1.5*diag*thickness pixels.
  const double worst = p.n_wires * p.thickness_max * 1.5 * std::max(p.height, p.width);
  if (worst > 0.2 * p.height * p.width)
    throw std::invalid_argument("synth_scene: parameters cannot keep wires sparse (<=20%)");
}

Plane lowfreq_noise(int h, int w, double amplitude, Rng& rng) {
  const int gh = 8, gw = 8;
  Plane grid(gh, gw);
  for (int y = 0; y < gh; ++y)
    for (int x = 0; x < gw; ++x)
      grid(y, x) = static_cast<float>(rng.uniform(-amplitude, amplitude));
  return bilinear_resize(grid, h, w);
}

void paint_background(ImageBuf& img, Rng& rng) {
  const int h = img.height(), w = img.width();
  float c0[3], c1[3];
  for (int c = 0; c < 3; ++c) {
    c0[c] = static_cast<float>(rng.uniform(0.25, 0.75));
    c1[c] = static_cast<float>(rng.uniform(0.25, 0.75));
  }
  const double theta = rng.uniform(0.0, kPi);
  const double dx = std::cos(theta), dy = std::sin(theta);
  // Projection range over the raster for normalization.
  const double span = std::abs(dx) * w + std::abs(dy) * h;
  const double base = std::min(0.0, dx * w) + std::min(0.0, dy * h);
  Plane t(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      t(y, x) = static_cast<float>(((x + 0.5) * dx + (y + 0.5) * dy - base) / span);
  const double amp = rng.uniform(0.02, 0.06);
  for (int c = 0; c < 3; ++c) {
    const Plane noise = lowfreq_noise(h, w, amp, rng);
    img.plane(c) = ((1.0f - t) * c0[c] + t * c1[c] + noise).min(1.0f).max(0.0f);
  }
}

struct Stroke {
  bool transposed = false;  // vertical wire: swap roles of x and y
  double vx = 0.0, vy = 0.0, a = 0.0;
  double thickness = 1.0;
  float color[3] = {0.0f, 0.0f, 0.0f};
};

Stroke draw_stroke(const SynthParams& p, double band_center, Rng& rng) {
  Stroke s;
  s.transposed = rng.bernoulli(0.5);
  const int h = s.transposed ? p.width : p.height;
  const int w = s.transposed ? p.height : p.width;
  s.thickness = rng.uniform(p.thickness_min, p.thickness_max);
  const double sag_max = p.sag_max > 0.0 ? p.sag_max : 0.25 * std::min(p.height, p.width);
  const double sag = rng.uniform(std::min(p.sag_min, sag_max), sag_max);
  const double half = w / 2.0;
  s.a = (rng.bernoulli(0.5) ? 1.0 : -1.0) * sag / (half * half);
  s.vx = rng.uniform(0.25 * w, 0.75 * w);
  const double band_half = 0.5 * p.band_fraction * h;
  s.vy = std::clamp(band_center * h + rng.uniform(-band_half, band_half), 0.05 * h, 0.95 * h);
  const bool dark = rng.bernoulli(0.5);
  const double lum = dark ? rng.uniform(0.02, 0.18) : rng.uniform(0.82, 0.98);
  for (int c = 0; c < 3; ++c)
    s.color[c] = static_cast<float>(std::clamp(lum + rng.uniform(-0.03, 0.03), 0.0, 1.0));
  return s;
}

void rasterize_stroke(ImageBuf& img, MaskBuf& mask, Plane& dist, const Stroke& s) {
  const int h = img.height(), w = img.width();
  const int ew = s.transposed ? h : w;  // extent along the parabola axis
  dist.setConstant(1e9f);
  const double radius = s.thickness / 2.0;
  const int stamp = static_cast<int>(std::ceil(radius + 1.5));
  int x_lo = w, x_hi = -1, y_lo = h, y_hi = -1;
  for (double u = -s.thickness; u <= ew - 1 + s.thickness; u += 0.5) {
    const double v = s.vy + s.a * (u - s.vx) * (u - s.vx);
    const double cx = s.transposed ? v : u;
    const double cy = s.transposed ? u : v;
    const int px_lo = std::max(0, static_cast<int>(std::floor(cx)) - stamp);
    const int px_hi = std::min(w - 1, static_cast<int>(std::ceil(cx)) + stamp);
    const int py_lo = std::max(0, static_cast<int>(std::floor(cy)) - stamp);
    const int py_hi = std::min(h - 1, static_cast<int>(std::ceil(cy)) + stamp);
    for (int py = py_lo; py <= py_hi; ++py)
      for (int px = px_lo; px <= px_hi; ++px) {
        const double d = std::hypot(px + 0.5 - cx, py + 0.5 - cy);
        dist(py, px) = std::min(dist(py, px), static_cast<float>(d));
      }
    x_lo = std::min(x_lo, px_lo);
    x_hi = std::max(x_hi, px_hi);
    y_lo = std::min(y_lo, py_lo);
    y_hi = std::max(y_hi, py_hi);
  }
  for (int py = y_lo; py <= y_hi; ++py)
    for (int px = x_lo; px <= x_hi; ++px) {
      const float d = dist(py, px);
      if (d > radius + 1.0f) continue;
      // 1-px anti-aliased falloff on the image; binary coverage on the mask.
      const float alpha = std::clamp(static_cast<float>(radius) + 0.5f - d, 0.0f, 1.0f);
      if (alpha > 0.0f)
        for (int c = 0; c < 3; ++c) {
          float& v = img.at(py, px, c);
          v = v + alpha * (s.color[c] - v);
        }
      if (d <= radius) mask.set(py, px, 1);
    }
}

}  // namespace

SynthScene synth_scene(const SynthParams& params) {
  validate_params(params);
  SynthScene scene;
  scene.params = params;
  scene.image = ImageBuf(params.height, params.width, 3);
  scene.mask = MaskBuf(params.height, params.width);

  Rng rng(params.seed);
  paint_background(scene.image, rng);
  const double band_center = rng.uniform(0.2, 0.8);
  Plane dist(params.height, params.width);
  for (int i = 0; i < params.n_wires; ++i) {
    const Stroke s = draw_stroke(params, band_center, rng);
    rasterize_stroke(scene.image, scene.mask, dist, s);
  }
  scene.wire_fraction = static_cast<double>(scene.mask.count_ones()) /
                        (static_cast<double>(params.height) * params.width);
  return scene;
}

SynthScene synth_scene(int h, int w, int n_wires, double thickness_min, double thickness_max,
                       std::uint64_t seed) {
  SynthParams p;
  p.height = h;
  p.width = w;
  p.n_wires = n_wires;
  p.thickness_min = thickness_min;
  p.thickness_max = thickness_max;
  p.seed = seed;
  return synth_scene(p);
}

SamplePair sample_patch(const ImageBuf& image, const MaskBuf& mask, int p, double min_frac,
                        int max_tries, Rng& rng) {
  const int h = image.height(), w = image.width();
  if (h < p || w < p) throw std::invalid_argument("sample_patch: image smaller than patch");
  if (mask.height() != h || mask.width() != w)
    throw std::invalid_argument("sample_patch: mask dims mismatch");
  const std::int64_t ones = mask.count_ones();
  if (ones == 0) throw std::runtime_error("sample_patch: mask has no wire pixels");

  SamplePair pair;
  bool found = false;
  for (int t = 0; t < max_tries && !found; ++t) {
    const WindowSpec win{static_cast<int>(rng.uniform_int(w - p + 1)),
                         static_cast<int>(rng.uniform_int(h - p + 1)), p, p};
    if (wire_fraction(mask, win) >= min_frac) {
      pair.window = win;
      found = true;
    }
  }
  if (!found) {
    // Center the crop on a uniformly chosen wire pixel.
    std::int64_t k = rng.uniform_int(ones);
    int cy = 0, cx = 0;
    for (int y = 0; y < h && k >= 0; ++y)
      for (int x = 0; x < w; ++x)
        if (mask.at(y, x) && k-- == 0) {
          cy = y;
          cx = x;
          y = h;
          break;
        }
    pair.window = {std::clamp(cx - p / 2, 0, w - p), std::clamp(cy - p / 2, 0, h - p), p, p};
    pair.fallback = true;
  }

  pair.local_image = extract_patch(image, pair.window);
  pair.local_mask = extract_mask(mask, pair.window);
  pair.global_image = bilinear_resize(image, p, p);
  pair.global_mask = maxpool_downsample_mask(mask, p, p);
  return pair;
}

SamplePair sample_patch(const SynthScene& scene, int p, double min_frac, int max_tries, Rng& rng) {
  return sample_patch(scene.image, scene.mask, p, min_frac, max_tries, rng);
}

AugmentParams draw_augment_params(Rng& rng) {
  AugmentParams p;
  p.scale = rng.uniform(0.5, 2.0);
  p.rot_deg = rng.uniform(-10.0, 10.0);
  p.hflip = rng.bernoulli(0.5);
  p.contrast = rng.uniform(0.8, 1.2);
  p.brightness = rng.uniform(-0.2, 0.2);
  return p;
}

namespace {

// Inverse map of (flip, then scale, then rotate) about the raster center.
struct InverseAffine {
  double cos_t, sin_t, inv_scale;
  bool hflip;
  double cx, cy;

  InverseAffine(int h, int w, const AugmentParams& p)
      : cos_t(std::cos(-p.rot_deg * kPi / 180.0)),
        sin_t(std::sin(-p.rot_deg * kPi / 180.0)),
        inv_scale(1.0 / p.scale),
        hflip(p.hflip),
        cx(w / 2.0),
        cy(h / 2.0) {}

  void map(double x, double y, double& sx, double& sy) const {
    const double u = x + 0.5 - cx, v = y + 0.5 - cy;
    double ur = u * cos_t - v * sin_t;
    double vr = u * sin_t + v * cos_t;
    ur *= inv_scale;
    vr *= inv_scale;
    if (hflip) ur = -ur;
    sx = ur + cx - 0.5;
    sy = vr + cy - 0.5;
  }
};

}  // namespace

ImageBuf warp_image(const ImageBuf& img, const AugmentParams& params) {
  const int h = img.height(), w = img.width();
  const InverseAffine inv(h, w, params);
  ImageBuf out(h, w, img.channels());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double sx, sy;
      inv.map(x, y, sx, sy);
      sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
      sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
      const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const double fx = sx - x0, fy = sy - y0;
      for (int c = 0; c < img.channels(); ++c) {
        const Plane& p = img.plane(c);
        const double top = (1.0 - fx) * p(y0, x0) + fx * p(y0, x1);
        const double bot = (1.0 - fx) * p(y1, x0) + fx * p(y1, x1);
        out.plane(c)(y, x) = static_cast<float>((1.0 - fy) * top + fy * bot);
      }
    }
  return out;
}

MaskBuf warp_mask(const MaskBuf& mask, const AugmentParams& params) {
  const int h = mask.height(), w = mask.width();
  const InverseAffine inv(h, w, params);
  MaskBuf out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double sx, sy;
      inv.map(x, y, sx, sy);
      const int nx = static_cast<int>(std::lround(sx)), ny = static_cast<int>(std::lround(sy));
      out.set(y, x, (nx >= 0 && nx < w && ny >= 0 && ny < h) ? mask.at(ny, nx) : 0);
    }
  return out;
}

SamplePair augment(const SamplePair& pair, const AugmentParams& params) {
  SamplePair out;
  out.window = pair.window;
  out.fallback = pair.fallback;
  out.global_image = warp_image(pair.global_image, params);
  out.global_mask = warp_mask(pair.global_mask, params);
  out.local_image = warp_image(pair.local_image, params);
  out.local_mask = warp_mask(pair.local_mask, params);
  const float gain = static_cast<float>(params.contrast);
  const float shift = static_cast<float>(params.brightness);
  if (gain != 1.0f || shift != 0.0f)
    for (ImageBuf* img : {&out.global_image, &out.local_image})
      for (int c = 0; c < img->channels(); ++c)
        img->plane(c) = (img->plane(c) * gain + shift).min(1.0f).max(0.0f);
  return out;
}

SamplePair augment(const SamplePair& pair, Rng& rng) { return augment(pair, draw_augment_params(rng)); }

NonwireCrops nonwire_crops(const ImageBuf& image, const MaskBuf& mask, int n, int size, Rng& rng,
                           int max_tries) {
  if (n < 0 || size < 1) throw std::invalid_argument("nonwire_crops: bad arguments");
  NonwireCrops out;
  out.requested = n;
  const int h = image.height(), w = image.width();
  if (h < size || w < size) {
    out.failed = n;
    return out;
  }
  for (int i = 0; i < n; ++i) {
    bool placed = false;
    for (int t = 0; t < max_tries && !placed; ++t) {
      const WindowSpec win{static_cast<int>(rng.uniform_int(w - size + 1)),
                           static_cast<int>(rng.uniform_int(h - size + 1)), size, size};
      if (wire_fraction(mask, win) == 0.0) {
        out.crops.push_back(extract_patch(image, win));
        placed = true;
      }
    }
    if (!placed) ++out.failed;
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  nlohmann::json arr = nlohmann::json::array();
  for (const ManifestEntry& e : entries) {
    arr.push_back({{"image", e.image_path},
                   {"mask", e.mask_path},
                   {"seed", e.params.seed},
                   {"params",
                    {{"height", e.params.height},
                     {"width", e.params.width},
                     {"n_wires", e.params.n_wires},
                     {"thickness_min", e.params.thickness_min},
                     {"thickness_max", e.params.thickness_max},
                     {"sag_min", e.params.sag_min},
                     {"sag_max", e.params.sag_max},
                     {"band_fraction", e.params.band_fraction},
                     {"background", e.params.background}}}});
  }
  const std::string text = arr.dump(2) + "\n";
  atomic_write_bytes(path, text.data(), text.size());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  nlohmann::json arr = nlohmann::json::parse(in);
  std::vector<ManifestEntry> out;
  for (const auto& item : arr) {
    ManifestEntry e;
    e.image_path = item.at("image").get<std::string>();
    e.mask_path = item.at("mask").get<std::string>();
    e.params.seed = item.at("seed").get<std::uint64_t>();
    const auto& p = item.at("params");
    e.params.height = p.at("height").get<int>();
    e.params.width = p.at("width").get<int>();
    e.params.n_wires = p.at("n_wires").get<int>();
    e.params.thickness_min = p.at("thickness_min").get<double>();
    e.params.thickness_max = p.at("thickness_max").get<double>();
    e.params.sag_min = p.at("sag_min").get<double>();
    e.params.sag_max = p.at("sag_max").get<double>();
    e.params.band_fraction = p.at("band_fraction").get<double>();
    e.params.background = p.at("background").get<std::string>();
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace wirepipe
