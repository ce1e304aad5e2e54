#pragma once

#include "wirepipe/image.hpp"

#include <utility>
#include <vector>

namespace wirepipe {

/// An axis-aligned patch location within a full-resolution image.
struct WindowSpec {
  int x = 0;  ///< left column
  int y = 0;  ///< top row
  int w = 0;
  int h = 0;

  bool operator==(const WindowSpec&) const = default;
  bool inside(int host_h, int host_w) const {
    return x >= 0 && y >= 0 && w >= 1 && h >= 1 && x + w <= host_w && y + h <= host_h;
  }
};

/// Row-major grid of p x p windows at the given stride. The final window in
/// each axis is clamped so its far edge equals the image edge; every pixel
/// is covered by at least one window. Images smaller than p yield a single
/// full-image window in that axis.
std::vector<WindowSpec> gen_windows(int height, int width, int p, int stride);

/// Fraction of 1-pixels inside the window.
double wire_fraction(const MaskBuf& mask, const WindowSpec& win);

struct GateResult {
  std::vector<WindowSpec> accepted;
  std::vector<WindowSpec> skipped;
};

/// Partitions windows by wire_fraction >= alpha against the coarse mask.
/// alpha = 0 accepts every window.
GateResult gate_windows(const std::vector<WindowSpec>& windows, const MaskBuf& coarse_mask,
                        double alpha);

/// Exact pixel copies; throw on out-of-bounds windows.
ImageBuf extract_patch(const ImageBuf& img, const WindowSpec& win);
MaskBuf extract_mask(const MaskBuf& mask, const WindowSpec& win);
Plane extract_plane(const Plane& plane, const WindowSpec& win);

/// Accumulates overlapping per-window probability patches and resolves them
/// to a per-pixel average. Sums are kept in double so the result is
/// independent of merge order well below the 1e-6 contract.
class MergeAccumulator {
 public:
  MergeAccumulator(int height, int width, int classes);

  /// Adds a patch predicted for `win`; patch dims must match the window.
  void merge_patch(const WindowSpec& win, const ProbMap& patch);

  /// Average where covered; `fill` value where no window contributed.
  ProbMap finalize_merge(const ProbMap& fill) const;

  /// Number of accepted windows covering each pixel.
  const Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& coverage()
      const {
    return count_;
  }

  int height() const { return static_cast<int>(count_.rows()); }
  int width() const { return static_cast<int>(count_.cols()); }
  int classes() const { return static_cast<int>(sum_.size()); }

 private:
  using DPlane = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  std::vector<DPlane> sum_;
  Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> count_;
};

}  // namespace wirepipe
