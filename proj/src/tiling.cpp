#include "wirepipe/tiling.hpp"

#include <stdexcept>

namespace wirepipe {

namespace {

std::vector<int> axis_origins(int extent, int p, int stride) {
  std::vector<int> origins;
  if (extent <= p) {
    origins.push_back(0);
    return origins;
  }
  for (int o = 0;; o += stride) {
    if (o + p >= extent) {
      origins.push_back(extent - p);
      break;
    }
    origins.push_back(o);
  }
  return origins;
}

}  // namespace

std::vector<WindowSpec> gen_windows(int height, int width, int p, int stride) {
  if (p < 1) throw std::invalid_argument("gen_windows: patch size must be >= 1");
  if (stride < 1 || stride > p) throw std::invalid_argument("gen_windows: stride must be in [1, p]");
  if (height < 1 || width < 1) throw std::invalid_argument("gen_windows: empty image");
  const std::vector<int> ys = axis_origins(height, p, stride);
  const std::vector<int> xs = axis_origins(width, p, stride);
  std::vector<WindowSpec> out;
  out.reserve(ys.size() * xs.size());
  for (int y : ys)
    for (int x : xs)
      out.push_back({x, y, std::min(p, width), std::min(p, height)});
  return out;
}

double wire_fraction(const MaskBuf& mask, const WindowSpec& win) {
  if (!win.inside(mask.height(), mask.width()))
    throw std::invalid_argument("wire_fraction: window out of bounds");
  const std::int64_t ones =
      (mask.data().block(win.y, win.x, win.h, win.w) == 1).count();
  return static_cast<double>(ones) / (static_cast<double>(win.w) * win.h);
}

GateResult gate_windows(const std::vector<WindowSpec>& windows, const MaskBuf& coarse_mask,
                        double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("gate_windows: alpha must be in [0,1]");
  GateResult out;
  for (const WindowSpec& win : windows) {
    if (wire_fraction(coarse_mask, win) >= alpha)
      out.accepted.push_back(win);
    else
      out.skipped.push_back(win);
  }
  return out;
}

ImageBuf extract_patch(const ImageBuf& img, const WindowSpec& win) {
  if (!win.inside(img.height(), img.width()))
    throw std::invalid_argument("extract_patch: window out of bounds");
  ImageBuf out(win.h, win.w, img.channels());
  for (int c = 0; c < img.channels(); ++c)
    out.plane(c) = img.plane(c).block(win.y, win.x, win.h, win.w);
  return out;
}

MaskBuf extract_mask(const MaskBuf& mask, const WindowSpec& win) {
  if (!win.inside(mask.height(), mask.width()))
    throw std::invalid_argument("extract_mask: window out of bounds");
  return MaskBuf(MaskPlane(mask.data().block(win.y, win.x, win.h, win.w)));
}

Plane extract_plane(const Plane& plane, const WindowSpec& win) {
  if (!win.inside(static_cast<int>(plane.rows()), static_cast<int>(plane.cols())))
    throw std::invalid_argument("extract_plane: window out of bounds");
  return plane.block(win.y, win.x, win.h, win.w);
}

MergeAccumulator::MergeAccumulator(int height, int width, int classes) {
  if (height < 1 || width < 1 || classes < 1)
    throw std::invalid_argument("MergeAccumulator: bad dimensions");
  sum_.resize(static_cast<std::size_t>(classes), DPlane::Zero(height, width));
  count_.setZero(height, width);
}

void MergeAccumulator::merge_patch(const WindowSpec& win, const ProbMap& patch) {
  if (!win.inside(height(), width()))
    throw std::invalid_argument("merge_patch: window out of bounds");
  if (patch.height() != win.h || patch.width() != win.w || patch.classes() != classes())
    throw std::invalid_argument("merge_patch: patch dims do not match window");
  for (int k = 0; k < classes(); ++k)
    sum_[static_cast<std::size_t>(k)].block(win.y, win.x, win.h, win.w) +=
        patch.plane(k).cast<double>();
  count_.block(win.y, win.x, win.h, win.w) += 1;
}

ProbMap MergeAccumulator::finalize_merge(const ProbMap& fill) const {
  if (fill.height() != height() || fill.width() != width() || fill.classes() != classes())
    throw std::invalid_argument("finalize_merge: fill dims mismatch");
  ProbMap out(height(), width(), classes());
  const auto covered = count_ > 0;
  const auto denom = count_.max(1).cast<double>();
  for (int k = 0; k < classes(); ++k) {
    const DPlane avg = sum_[static_cast<std::size_t>(k)] / denom;
    out.plane(k) = covered.select(avg.cast<float>(), fill.plane(k));
  }
  return out;
}

}  // namespace wirepipe
