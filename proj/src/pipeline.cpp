#include "wirepipe/pipeline.hpp"

#include "wirepipe/image_ops.hpp"
#include "wirepipe/parallel.hpp"

#include <chrono>
#include <limits>
#include <stdexcept>

namespace wirepipe {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void PipelineConfig::validate() const {
  if (p_train < 1) throw std::invalid_argument("config: p_train must be positive");
  if (p_infer < 1) throw std::invalid_argument("config: p_infer must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("config: alpha must be in [0,1]");
  if (stride < 0 || stride > p_infer)
    throw std::invalid_argument("config: stride must be in [1, p_infer] (or 0 for p_infer)");
  if (minmax_kernel < 1) throw std::invalid_argument("config: minmax_kernel must be positive");
  if (lambda < 0.0) throw std::invalid_argument("config: lambda must be non-negative");
  if (inpaint_tile < 1) throw std::invalid_argument("config: inpaint_tile must be positive");
  if (inpaint_overlap < 0 || inpaint_overlap >= inpaint_tile)
    throw std::invalid_argument("config: inpaint_overlap must be in [0, inpaint_tile)");
  if (onion_d < 1) throw std::invalid_argument("config: onion_d must be positive");
  if (threads < 0) throw std::invalid_argument("config: threads must be >= 0");
}

SegmentationResult segment(const ImageBuf& img, const Segmenter& model, const PipelineConfig& cfg) {
  cfg.validate();
  if (img.channels() != 3) throw std::invalid_argument("segment: expected a 3-channel image");
  const int h = img.height(), w = img.width();
  const int p = cfg.p_infer;

  SegmentationResult out;
  const auto t_start = std::chrono::steady_clock::now();

  // Coarse pass on the square-resized global image.
  const ImageBuf img_ds = bilinear_resize(img, p, p);
  const ImageBuf coarse_logits = model.coarse_forward(assemble_coarse_input(img_ds, cfg.minmax_kernel));
  if (coarse_logits.height() != p || coarse_logits.width() != p || coarse_logits.channels() != 2)
    throw std::runtime_error("segment: coarse logits have unexpected shape");
  const ProbMap p_glo = softmax_logits(coarse_logits);
  const ProbMap p_up = bilinear_resize(p_glo, h, w);
  const MaskBuf coarse_mask = argmax_classes(p_up);
  out.elapsed.coarse_s = seconds_since(t_start);

  // alpha-gated sliding-window refinement.
  const auto t_fine = std::chrono::steady_clock::now();
  const std::vector<WindowSpec> windows = gen_windows(h, w, p, cfg.effective_stride());
  GateResult gate = gate_windows(windows, coarse_mask, cfg.alpha);
  out.windows_total = static_cast<int>(windows.size());
  out.windows_refined = static_cast<int>(gate.accepted.size());

  MergeAccumulator acc(h, w, 2);
  std::vector<ProbMap> patches(gate.accepted.size());
  parallel_for(gate.accepted.size(), cfg.threads, [&](std::size_t i) {
    const WindowSpec& win = gate.accepted[i];
    try {
      const ImageBuf patch = extract_patch(img, win);
      const Plane cond = extract_plane(p_up.plane(kWireClass), win);
      const ImageBuf logits =
          model.fine_forward(assemble_fine_input(patch, cond, cfg.minmax_kernel), win);
      if (logits.height() != win.h || logits.width() != win.w || logits.channels() != 2)
        throw std::runtime_error("fine logits have unexpected shape");
      patches[i] = softmax_logits(logits);
    } catch (const std::exception& e) {
      throw std::runtime_error("segment: window (" + std::to_string(win.x) + "," +
                               std::to_string(win.y) + " " + std::to_string(win.w) + "x" +
                               std::to_string(win.h) + ") failed: " + e.what());
    }
  });
  for (std::size_t i = 0; i < gate.accepted.size(); ++i)
    acc.merge_patch(gate.accepted[i], patches[i]);

  out.prob = acc.finalize_merge(p_up);
  out.mask = argmax_classes(out.prob);
  out.elapsed.fine_s = seconds_since(t_fine);
  out.elapsed.total_s = seconds_since(t_start);
  return out;
}

ImageBuf remove(const ImageBuf& img, const Segmenter& model, const Inpainter& inpainter,
                const PipelineConfig& cfg, RemoveStats* stats) {
  SegmentationResult seg = segment(img, model, cfg);
  TileInpaintResult inp = tile_inpaint(img, seg.mask, inpainter, cfg.inpaint_tile,
                                       cfg.inpaint_overlap, cfg.onion_d, cfg.threads);
  if (stats) {
    stats->seg = std::move(seg);
    stats->tiles_total = inp.tiles_total;
    stats->tiles_processed = inp.tiles_processed;
  }
  return std::move(inp.image);
}

ProfileReport profile(const std::vector<ImageBuf>& imgs, const Segmenter& model,
                      const PipelineConfig& cfg) {
  ProfileReport rep;
  rep.min_s = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const ImageBuf& img : imgs) {
    const SegmentationResult r = segment(img, model, cfg);
    ProfileRow row;
    row.seconds = r.elapsed.total_s;
    row.windows_total = r.windows_total;
    row.windows_refined = r.windows_refined;
    rep.per_image.push_back(row);
    sum += row.seconds;
    rep.min_s = std::min(rep.min_s, row.seconds);
    rep.max_s = std::max(rep.max_s, row.seconds);
    rep.windows_refined += r.windows_refined;
  }
  if (!imgs.empty()) rep.avg_s = sum / static_cast<double>(imgs.size());
  if (imgs.empty()) rep.min_s = 0.0;
  return rep;
}

}  // namespace wirepipe
