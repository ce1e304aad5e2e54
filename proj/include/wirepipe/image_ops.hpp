#pragma once

#include "wirepipe/image.hpp"

namespace wirepipe {

/// Rec.709 luma of an RGB image, clamped to [0,1].
ImageBuf luminance(const ImageBuf& img);

/// Sliding k x k order-statistic filters on a single-channel image.
/// The window for output pixel i spans rows [i - (k-1)/2, i - (k-1)/2 + k - 1]
/// (floor-biased center for even k); borders replicate the edge sample.
ImageBuf min_filter(const ImageBuf& chan, int k);
ImageBuf max_filter(const ImageBuf& chan, int k);

/// Bilinear resampling with half-pixel-center alignment. Identity (bitwise)
/// when the target dims equal the source dims.
ImageBuf bilinear_resize(const ImageBuf& img, int out_h, int out_w);
Plane bilinear_resize(const Plane& plane, int out_h, int out_w);
ProbMap bilinear_resize(const ProbMap& probs, int out_h, int out_w);

/// Label downsampling that never loses an annotation: an output pixel is 1
/// iff any source pixel in its footprint is 1. Output cell (i,j) covers
/// source rows floor(i*H/out_h) .. ceil((i+1)*H/out_h)-1 (likewise columns),
/// so footprints tile the input with overlap at fractional boundaries.
MaskBuf maxpool_downsample_mask(const MaskBuf& mask, int out_h, int out_w);

/// Binary dilation by a d x d square structuring element (same anchoring as
/// the filters); pixels outside the canvas are treated as 0.
MaskBuf dilate(const MaskBuf& mask, int d);

/// Onion ring: dilate(mask, d) AND NOT mask. Disjoint from mask.
MaskBuf onion_ring(const MaskBuf& mask, int d);

/// Per-pixel softmax across channels.
ProbMap softmax_logits(const ImageBuf& logits);

/// 1 where the wire-class probability is strictly greatest; ties go to
/// background.
MaskBuf argmax_classes(const ProbMap& p);

}  // namespace wirepipe
