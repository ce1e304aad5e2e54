#include "wirepipe/image_ops.hpp"

#include <algorithm>
#include <cmath>

namespace wirepipe {

namespace {

// Window over output index i: [i - (k-1)/2, i - (k-1)/2 + k - 1].
inline int window_lo(int i, int k) { return i - (k - 1) / 2; }

enum class Extreme { Min, Max };

Plane order_filter_1d_rows(const Plane& in, int k, Extreme mode) {
  const int h = static_cast<int>(in.rows()), w = static_cast<int>(in.cols());
  Plane out(h, w);
  for (int y = 0; y < h; ++y) {
    const int lo = window_lo(y, k), hi = lo + k - 1;
    for (int x = 0; x < w; ++x) {
      float v = in(std::clamp(lo, 0, h - 1), x);
      for (int yy = lo + 1; yy <= hi; ++yy) {
        const float s = in(std::clamp(yy, 0, h - 1), x);
        v = mode == Extreme::Min ? std::min(v, s) : std::max(v, s);
      }
      out(y, x) = v;
    }
  }
  return out;
}

Plane order_filter_1d_cols(const Plane& in, int k, Extreme mode) {
  const int h = static_cast<int>(in.rows()), w = static_cast<int>(in.cols());
  Plane out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int lo = window_lo(x, k), hi = lo + k - 1;
      float v = in(y, std::clamp(lo, 0, w - 1));
      for (int xx = lo + 1; xx <= hi; ++xx) {
        const float s = in(y, std::clamp(xx, 0, w - 1));
        v = mode == Extreme::Min ? std::min(v, s) : std::max(v, s);
      }
      out(y, x) = v;
    }
  }
  return out;
}

ImageBuf order_filter(const ImageBuf& chan, int k, Extreme mode) {
  if (chan.channels() != 1)
    throw std::invalid_argument("min/max filter: expected a single-channel image");
  if (k < 1) throw std::invalid_argument("min/max filter: kernel size must be >= 1");
  ImageBuf out(chan.height(), chan.width(), 1);
  // Rectangular window, so the 2D extreme separates into row and column passes.
  out.plane(0) = order_filter_1d_cols(order_filter_1d_rows(chan.plane(0), k, mode), k, mode);
  return out;
}

}  // namespace

ImageBuf luminance(const ImageBuf& img) {
  if (img.channels() != 3) throw std::invalid_argument("luminance: expected a 3-channel image");
  ImageBuf out(img.height(), img.width(), 1);
  out.plane(0) =
      (0.2126f * img.plane(0) + 0.7152f * img.plane(1) + 0.0722f * img.plane(2)).min(1.0f).max(0.0f);
  return out;
}

ImageBuf min_filter(const ImageBuf& chan, int k) { return order_filter(chan, k, Extreme::Min); }
ImageBuf max_filter(const ImageBuf& chan, int k) { return order_filter(chan, k, Extreme::Max); }

Plane bilinear_resize(const Plane& plane, int out_h, int out_w) {
  const int h = static_cast<int>(plane.rows()), w = static_cast<int>(plane.cols());
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("bilinear_resize: zero target dimension");
  Plane out(out_h, out_w);
  const double sy = static_cast<double>(h) / out_h;
  const double sx = static_cast<double>(w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, w - 1);
      const double wx = fx - x0;
      const double top = (1.0 - wx) * plane(y0, x0) + wx * plane(y0, x1);
      const double bot = (1.0 - wx) * plane(y1, x0) + wx * plane(y1, x1);
      out(y, x) = static_cast<float>((1.0 - wy) * top + wy * bot);
    }
  }
  return out;
}

ImageBuf bilinear_resize(const ImageBuf& img, int out_h, int out_w) {
  if (img.empty()) throw std::invalid_argument("bilinear_resize: empty image");
  ImageBuf out(out_h, out_w, img.channels());
  for (int c = 0; c < img.channels(); ++c) out.plane(c) = bilinear_resize(img.plane(c), out_h, out_w);
  return out;
}

ProbMap bilinear_resize(const ProbMap& probs, int out_h, int out_w) {
  if (probs.empty()) throw std::invalid_argument("bilinear_resize: empty probability map");
  ProbMap out(out_h, out_w, probs.classes());
  for (int k = 0; k < probs.classes(); ++k) out.plane(k) = bilinear_resize(probs.plane(k), out_h, out_w);
  return out;
}

MaskBuf maxpool_downsample_mask(const MaskBuf& mask, int out_h, int out_w) {
  const int h = mask.height(), w = mask.width();
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("maxpool_downsample_mask: bad target size");
  if (out_h > h || out_w > w)
    throw std::invalid_argument("maxpool_downsample_mask: upscaling request");
  MaskBuf out(out_h, out_w);
  const auto& in = mask.data();
  for (int i = 0; i < out_h; ++i) {
    const int y0 = static_cast<int>(static_cast<std::int64_t>(i) * h / out_h);
    const int y1 =
        static_cast<int>((static_cast<std::int64_t>(i + 1) * h + out_h - 1) / out_h) - 1;
    for (int j = 0; j < out_w; ++j) {
      const int x0 = static_cast<int>(static_cast<std::int64_t>(j) * w / out_w);
      const int x1 =
          static_cast<int>((static_cast<std::int64_t>(j + 1) * w + out_w - 1) / out_w) - 1;
      out.set(i, j, in.block(y0, x0, y1 - y0 + 1, x1 - x0 + 1).maxCoeff());
    }
  }
  return out;
}

MaskBuf dilate(const MaskBuf& mask, int d) {
  if (d < 1) throw std::invalid_argument("dilate: kernel size must be >= 1");
  const int h = mask.height(), w = mask.width();
  const auto& in = mask.data();
  // Separable binary max with zero padding outside the canvas.
  MaskPlane rows(h, w);
  for (int y = 0; y < h; ++y) {
    const int lo = std::max(0, window_lo(y, d));
    const int hi = std::min(h - 1, window_lo(y, d) + d - 1);
    for (int x = 0; x < w; ++x) {
      std::uint8_t v = 0;
      for (int yy = lo; yy <= hi && !v; ++yy) v = in(yy, x);
      rows(y, x) = v;
    }
  }
  MaskBuf out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int lo = std::max(0, window_lo(x, d));
      const int hi = std::min(w - 1, window_lo(x, d) + d - 1);
      std::uint8_t v = 0;
      for (int xx = lo; xx <= hi && !v; ++xx) v = rows(y, xx);
      out.set(y, x, v);
    }
  }
  return out;
}

MaskBuf onion_ring(const MaskBuf& mask, int d) {
  MaskBuf ring = dilate(mask, d);
  ring.data() = (ring.data() == 1 && mask.data() == 0).cast<std::uint8_t>();
  return ring;
}

ProbMap softmax_logits(const ImageBuf& logits) {
  const int k = logits.channels();
  if (k < 1) throw std::invalid_argument("softmax_logits: empty logits");
  const int h = logits.height(), w = logits.width();
  ProbMap out(h, w, k);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float m = logits.at(y, x, 0);
      for (int c = 1; c < k; ++c) m = std::max(m, logits.at(y, x, c));
      float sum = 0.0f;
      for (int c = 0; c < k; ++c) {
        const float e = std::exp(logits.at(y, x, c) - m);
        out.plane(c)(y, x) = e;
        sum += e;
      }
      for (int c = 0; c < k; ++c) out.plane(c)(y, x) /= sum;
    }
  }
  return out;
}

MaskBuf argmax_classes(const ProbMap& p) {
  if (p.empty()) throw std::invalid_argument("argmax_classes: empty probability map");
  const int h = p.height(), w = p.width(), k = p.classes();
  MaskBuf out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int best = 0;
      float best_p = p.at(y, x, 0);
      for (int c = 1; c < k; ++c) {
        // Strictly greater: on ties the lower (background) class wins.
        if (p.at(y, x, c) > best_p) {
          best_p = p.at(y, x, c);
          best = c;
        }
      }
      out.set(y, x, best == kWireClass ? 1 : 0);
    }
  }
  return out;
}

}  // namespace wirepipe
