#include "wirepipe/eval.hpp"

#include "wirepipe/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace wirepipe;

namespace {

MaskBuf random_mask(int h, int w, double density, std::uint64_t seed) {
  Rng rng(seed);
  MaskBuf m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(y, x, rng.bernoulli(density) ? 1 : 0);
  return m;
}

}  // namespace

TEST_CASE("confusion: enumeration oracle") {
  MaskBuf empty(8, 8);
  const ConfusionCounts e = confusion(empty, empty);
  CHECK(e.tn == 64);
  CHECK(e.tp + e.fp + e.fn == 0);

  const MaskBuf m = random_mask(8, 8, 0.4, 1);
  const ConfusionCounts same = confusion(m, m);
  CHECK(same.fp == 0);
  CHECK(same.fn == 0);
  CHECK(same.tp == static_cast<std::uint64_t>(m.count_ones()));

  // 4x4 hand case.
  MaskBuf pred(4, 4), gt(4, 4);
  pred.set(0, 0, 1);
  pred.set(1, 1, 1);
  pred.set(2, 2, 1);
  gt.set(1, 1, 1);
  gt.set(2, 2, 1);
  gt.set(3, 3, 1);
  const ConfusionCounts c = confusion(pred, gt);
  CHECK(c.tp == 2);
  CHECK(c.fp == 1);
  CHECK(c.fn == 1);
  CHECK(c.tn == 12);
  CHECK(c.total() == 16);
}

TEST_CASE("metrics: identities, conventions, and the published-row cross-check") {
  ConfusionCounts perfect{100, 0, 0, 900};
  CHECK(iou(perfect) == 1.0);
  CHECK(f1(perfect) == 1.0);
  CHECK(precision(perfect) == 1.0);
  CHECK(recall(perfect) == 1.0);

  ConfusionCounts disjoint{0, 50, 70, 880};
  CHECK(iou(disjoint) == 0.0);
  CHECK(precision(disjoint) == 0.0);
  CHECK(recall(disjoint) == 0.0);

  ConfusionCounts both_empty{0, 0, 0, 64};
  CHECK(iou(both_empty) == 1.0);
  CHECK(f1(both_empty) == 1.0);
  CHECK(precision(both_empty) == 1.0);
  CHECK(recall(both_empty) == 1.0);

  // F1 = 2*IoU/(1+IoU) identically; 1000 random records.
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    ConfusionCounts c;
    c.tp = static_cast<std::uint64_t>(rng.uniform_int(1000));
    c.fp = static_cast<std::uint64_t>(rng.uniform_int(1000));
    c.fn = static_cast<std::uint64_t>(rng.uniform_int(1000));
    c.tn = static_cast<std::uint64_t>(rng.uniform_int(1000));
    const double i_ = iou(c), f_ = f1(c);
    CHECK(std::abs(f_ - 2.0 * i_ / (1.0 + i_)) <= 1e-9);
    CHECK(i_ <= precision(c) + 1e-12);
    CHECK(i_ <= recall(c) + 1e-12);
    // Swapping pred/gt swaps precision and recall, keeps IoU and F1.
    ConfusionCounts swapped = c;
    std::swap(swapped.fp, swapped.fn);
    CHECK(iou(swapped) == iou(c));
    CHECK(f1(swapped) == f1(c));
    CHECK(precision(swapped) == recall(c));
    CHECK(recall(swapped) == precision(c));
  }

  // 60.83 IoU <-> 75.65 F1 satisfy the identity to rounding.
  const double f_from_iou = 2.0 * 0.6083 / (1.0 + 0.6083);
  CHECK(std::abs(f_from_iou - 0.7565) < 5e-4);
}

TEST_CASE("bucketed_iou: pooling and empty buckets") {
  std::vector<std::pair<ConfusionCounts, std::pair<int, int>>> one_bucket = {
      {{10, 5, 5, 100}, {1000, 1000}}, {{30, 10, 10, 100}, {2000, 2000}}};
  const BucketedIou b1 = bucketed_iou(one_bucket);
  REQUIRE(b1.small.has_value());
  CHECK_FALSE(b1.medium.has_value());
  CHECK_FALSE(b1.large.has_value());
  ConfusionCounts pooled{40, 15, 15, 200};
  CHECK(*b1.small == doctest::Approx(iou(pooled)));

  std::vector<std::pair<ConfusionCounts, std::pair<int, int>>> two = {
      {{10, 0, 0, 10}, {2999, 2999}},
      {{0, 7, 3, 10}, {4000, 4000}},
      {{5, 5, 5, 10}, {4000, 5000}},
  };
  const BucketedIou b2 = bucketed_iou(two);
  CHECK(*b2.small == 1.0);
  ConfusionCounts med{5, 12, 8, 20};
  CHECK(*b2.medium == doctest::Approx(iou(med)));
  CHECK_FALSE(b2.large.has_value());

  CHECK(size_bucket(3000, 3000) == SizeBucket::Small);
  CHECK(size_bucket(3000, 3001) == SizeBucket::Medium);
  CHECK(size_bucket(6000, 6000) == SizeBucket::Medium);
  CHECK(size_bucket(6001, 6000) == SizeBucket::Large);
}

TEST_CASE("psnr: analytic values and a scalar oracle") {
  ImageBuf a(8, 8, 3, 0.5f);
  CHECK(psnr(a, a) == 99.0);

  ImageBuf b(8, 8, 3, 0.6f);  // MSE = 0.01
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-5));

  Rng rng(3);
  ImageBuf x(8, 8, 3), y(8, 8, 3);
  double se = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int yy = 0; yy < 8; ++yy)
      for (int xx = 0; xx < 8; ++xx) {
        x.at(yy, xx, c) = static_cast<float>(rng.uniform01());
        y.at(yy, xx, c) = static_cast<float>(rng.uniform01());
        const double d = static_cast<double>(x.at(yy, xx, c)) - y.at(yy, xx, c);
        se += d * d;
      }
  const double mse = se / (8 * 8 * 3);
  CHECK(psnr(x, y) == doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-9));
}

TEST_CASE("report emission: CSV and JSON summaries") {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "wirepipe_eval_test";
  std::filesystem::create_directories(dir);

  std::vector<EvalRow> rows(2);
  rows[0] = {"a.png", {10, 2, 3, 85}, 100, 100};
  rows[1] = {"b.png", {5, 5, 0, 90}, 100, 100};

  const auto csv_path = dir / "report.csv";
  write_seg_report_csv(csv_path, rows);
  std::ifstream csv(csv_path);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "name,height,width,tp,fp,fn,tn,iou,f1,precision,recall");
  int data_lines = 0;
  bool has_summary = false;
  while (std::getline(csv, line)) {
    ++data_lines;
    if (line.rfind("__all__", 0) == 0) has_summary = true;
  }
  CHECK(has_summary);
  CHECK(data_lines >= 3);  // two rows + pooled summary (+ bucket rows)

  const auto json_path = dir / "report.json";
  write_seg_report_json(json_path, rows);
  std::ifstream json(json_path);
  std::stringstream buf;
  buf << json.rdbuf();
  CHECK(buf.str().find("\"summary\"") != std::string::npos);
  CHECK(buf.str().find("\"iou\"") != std::string::npos);
  std::filesystem::remove_all(dir);
}
