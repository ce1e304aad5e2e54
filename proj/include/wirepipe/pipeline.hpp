#pragma once

#include "wirepipe/image.hpp"
#include "wirepipe/inpaint.hpp"
#include "wirepipe/model.hpp"
#include "wirepipe/tiling.hpp"

#include <vector>

namespace wirepipe {

/// Every tunable constant of the two-stage pipeline and the inpainter.
struct PipelineConfig {
  int p_train = 512;
  int p_infer = 1024;
  double alpha = 0.01;
  int stride = 0;  ///< 0 means p_infer (non-overlapping grid, border-clamped)
  int minmax_kernel = 6;
  double lambda = 1.0;
  int inpaint_tile = 512;
  int inpaint_overlap = 32;
  int onion_d = 7;
  int threads = 0;  ///< 0: WIREPIPE_THREADS env or hardware concurrency

  int effective_stride() const { return stride > 0 ? stride : p_infer; }

  /// Throws std::invalid_argument on any out-of-range field.
  void validate() const;
};

struct StageTimings {
  double coarse_s = 0.0;
  double fine_s = 0.0;
  double total_s = 0.0;
};

struct SegmentationResult {
  ProbMap prob;   ///< full-resolution merged probability
  MaskBuf mask;   ///< argmax of prob
  int windows_total = 0;
  int windows_refined = 0;
  StageTimings elapsed;
};

/// Two-stage inference: downsample -> coarse probability -> upsample ->
/// alpha-gated sliding-window fine refinement conditioned on the coarse
/// probability crop -> per-pixel-average merge (skipped windows inherit the
/// upsampled coarse probability) -> argmax.
SegmentationResult segment(const ImageBuf& img, const Segmenter& model, const PipelineConfig& cfg);

struct RemoveStats {
  SegmentationResult seg;
  int tiles_total = 0;
  int tiles_processed = 0;
};

/// segment + tile-based inpainting. Output equals the input bit-exactly
/// wherever the predicted mask is 0.
ImageBuf remove(const ImageBuf& img, const Segmenter& model, const Inpainter& inpainter,
                const PipelineConfig& cfg, RemoveStats* stats = nullptr);

struct ProfileRow {
  double seconds = 0.0;
  int windows_total = 0;
  int windows_refined = 0;
};

struct ProfileReport {
  std::vector<ProfileRow> per_image;
  double avg_s = 0.0, min_s = 0.0, max_s = 0.0;
  long windows_refined = 0;
};

/// Wall-clock profile of segment() over a set of images.
ProfileReport profile(const std::vector<ImageBuf>& imgs, const Segmenter& model,
                      const PipelineConfig& cfg);

}  // namespace wirepipe
