#pragma once

#include "wirepipe/image.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace wirepipe {

/// Pixel confusion counts with wire as the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  std::uint64_t total() const { return tp + fp + fn + tn; }
};

ConfusionCounts confusion(const MaskBuf& pred, const MaskBuf& gt);

/// 0/0 resolves to 1.0 when prediction and ground truth are both empty
/// (a perfect prediction), 0.0 otherwise.
double iou(const ConfusionCounts& c);
double f1(const ConfusionCounts& c);
double precision(const ConfusionCounts& c);
double recall(const ConfusionCounts& c);

/// Image-area buckets: small <= 3000^2 < medium <= 6000^2 < large.
enum class SizeBucket { Small, Medium, Large };
SizeBucket size_bucket(int height, int width);
const char* bucket_name(SizeBucket b);

struct BucketedIou {
  std::optional<double> small, medium, large;  ///< absent when the bucket is empty
};

/// Pools confusion counts per bucket (micro-average), then computes IoU.
BucketedIou bucketed_iou(const std::vector<std::pair<ConfusionCounts, std::pair<int, int>>>& results);

/// 10*log10(1/MSE) over all channels, capped at the 99 dB sentinel.
double psnr(const ImageBuf& a, const ImageBuf& b);

/// Per-image metric rows plus pooled summary, emitted as CSV and JSON.
struct EvalRow {
  std::string name;
  ConfusionCounts counts;
  int height = 0, width = 0;
};

void write_seg_report_csv(const std::filesystem::path& path, const std::vector<EvalRow>& rows);
void write_seg_report_json(const std::filesystem::path& path, const std::vector<EvalRow>& rows);

struct PsnrRow {
  std::string name;
  double psnr_db = 0.0;
};

void write_psnr_report_csv(const std::filesystem::path& path, const std::vector<PsnrRow>& rows);
void write_psnr_report_json(const std::filesystem::path& path, const std::vector<PsnrRow>& rows);

}  // namespace wirepipe
