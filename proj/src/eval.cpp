#include "wirepipe/eval.hpp"

#include "wirepipe/io.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace wirepipe {

ConfusionCounts confusion(const MaskBuf& pred, const MaskBuf& gt) {
  if (pred.height() != gt.height() || pred.width() != gt.width())
    throw std::invalid_argument("confusion: shape mismatch");
  ConfusionCounts c;
  c.tp = static_cast<std::uint64_t>((pred.data() == 1 && gt.data() == 1).count());
  c.fp = static_cast<std::uint64_t>((pred.data() == 1 && gt.data() == 0).count());
  c.fn = static_cast<std::uint64_t>((pred.data() == 0 && gt.data() == 1).count());
  c.tn = static_cast<std::uint64_t>((pred.data() == 0 && gt.data() == 0).count());
  return c;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t denom, bool perfect_when_empty) {
  if (denom == 0) return perfect_when_empty ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(denom);
}

}  // namespace

double iou(const ConfusionCounts& c) { return ratio(c.tp, c.tp + c.fp + c.fn, true); }
double f1(const ConfusionCounts& c) { return ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, true); }
double precision(const ConfusionCounts& c) {
  if (c.tp + c.fp == 0) return c.fn == 0 ? 1.0 : 0.0;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}
double recall(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0) return c.fp == 0 ? 1.0 : 0.0;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

SizeBucket size_bucket(int height, int width) {
  const std::int64_t area = static_cast<std::int64_t>(height) * width;
  if (area <= 3000LL * 3000LL) return SizeBucket::Small;
  if (area <= 6000LL * 6000LL) return SizeBucket::Medium;
  return SizeBucket::Large;
}

const char* bucket_name(SizeBucket b) {
  switch (b) {
    case SizeBucket::Small: return "small";
    case SizeBucket::Medium: return "medium";
    default: return "large";
  }
}

BucketedIou bucketed_iou(
    const std::vector<std::pair<ConfusionCounts, std::pair<int, int>>>& results) {
  ConfusionCounts pool[3];
  bool seen[3] = {false, false, false};
  for (const auto& [counts, dims] : results) {
    const int b = static_cast<int>(size_bucket(dims.first, dims.second));
    pool[b] += counts;
    seen[b] = true;
  }
  BucketedIou out;
  if (seen[0]) out.small = iou(pool[0]);
  if (seen[1]) out.medium = iou(pool[1]);
  if (seen[2]) out.large = iou(pool[2]);
  return out;
}

double psnr(const ImageBuf& a, const ImageBuf& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("psnr: shape mismatch");
  double se = 0.0;
  for (int c = 0; c < a.channels(); ++c)
    se += (a.plane(c) - b.plane(c)).cast<double>().square().sum();
  const double mse = se / (static_cast<double>(a.height()) * a.width() * a.channels());
  if (mse <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

namespace {

ConfusionCounts pool_rows(const std::vector<EvalRow>& rows) {
  ConfusionCounts all;
  for (const EvalRow& r : rows) all += r.counts;
  return all;
}

}  // namespace

void write_seg_report_csv(const std::filesystem::path& path, const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  out << "name,height,width,tp,fp,fn,tn,iou,f1,precision,recall\n";
  auto emit = [&](const std::string& name, int h, int w, const ConfusionCounts& c) {
    out << name << "," << h << "," << w << "," << c.tp << "," << c.fp << "," << c.fn << "," << c.tn
        << "," << iou(c) << "," << f1(c) << "," << precision(c) << "," << recall(c) << "\n";
  };
  for (const EvalRow& r : rows) emit(r.name, r.height, r.width, r.counts);
  emit("__all__", 0, 0, pool_rows(rows));

  std::vector<std::pair<ConfusionCounts, std::pair<int, int>>> per_bucket;
  for (const EvalRow& r : rows) per_bucket.push_back({r.counts, {r.height, r.width}});
  const BucketedIou buckets = bucketed_iou(per_bucket);
  if (buckets.small) out << "__iou_small__,,,,,,," << *buckets.small << ",,,\n";
  if (buckets.medium) out << "__iou_medium__,,,,,,," << *buckets.medium << ",,,\n";
  if (buckets.large) out << "__iou_large__,,,,,,," << *buckets.large << ",,,\n";

  const std::string text = out.str();
  atomic_write_bytes(path, text.data(), text.size());
}

void write_seg_report_json(const std::filesystem::path& path, const std::vector<EvalRow>& rows) {
  nlohmann::json images = nlohmann::json::array();
  for (const EvalRow& r : rows) {
    images.push_back({{"name", r.name},
                      {"height", r.height},
                      {"width", r.width},
                      {"tp", r.counts.tp},
                      {"fp", r.counts.fp},
                      {"fn", r.counts.fn},
                      {"tn", r.counts.tn},
                      {"iou", iou(r.counts)},
                      {"f1", f1(r.counts)},
                      {"precision", precision(r.counts)},
                      {"recall", recall(r.counts)}});
  }
  const ConfusionCounts all = pool_rows(rows);
  nlohmann::json summary = {{"iou", iou(all)},
                            {"f1", f1(all)},
                            {"precision", precision(all)},
                            {"recall", recall(all)},
                            {"tp", all.tp},
                            {"fp", all.fp},
                            {"fn", all.fn},
                            {"tn", all.tn}};
  std::vector<std::pair<ConfusionCounts, std::pair<int, int>>> per_bucket;
  for (const EvalRow& r : rows) per_bucket.push_back({r.counts, {r.height, r.width}});
  const BucketedIou buckets = bucketed_iou(per_bucket);
  if (buckets.small) summary["iou_small"] = *buckets.small;
  if (buckets.medium) summary["iou_medium"] = *buckets.medium;
  if (buckets.large) summary["iou_large"] = *buckets.large;

  const std::string text = nlohmann::json{{"images", images}, {"summary", summary}}.dump(2) + "\n";
  atomic_write_bytes(path, text.data(), text.size());
}

void write_psnr_report_csv(const std::filesystem::path& path, const std::vector<PsnrRow>& rows) {
  std::ostringstream out;
  out << "name,psnr_db\n";
  double sum = 0.0;
  for (const PsnrRow& r : rows) {
    out << r.name << "," << r.psnr_db << "\n";
    sum += r.psnr_db;
  }
  out << "__mean__," << (rows.empty() ? 0.0 : sum / static_cast<double>(rows.size())) << "\n";
  const std::string text = out.str();
  atomic_write_bytes(path, text.data(), text.size());
}

void write_psnr_report_json(const std::filesystem::path& path, const std::vector<PsnrRow>& rows) {
  nlohmann::json images = nlohmann::json::array();
  double sum = 0.0;
  for (const PsnrRow& r : rows) {
    images.push_back({{"name", r.name}, {"psnr_db", r.psnr_db}});
    sum += r.psnr_db;
  }
  const std::string text =
      nlohmann::json{{"images", images},
                     {"summary",
                      {{"mean_psnr_db", rows.empty() ? 0.0 : sum / static_cast<double>(rows.size())},
                       {"count", rows.size()}}}}
          .dump(2) +
      "\n";
  atomic_write_bytes(path, text.data(), text.size());
}

}  // namespace wirepipe
