#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vseg/image_io.hpp"

namespace vseg::eval {

struct Confusion {
  long long tp = 0;
  long long tn = 0;
  long long fp = 0;
  long long fn = 0;

  long long total() const { return tp + tn + fp + fn; }
  Confusion& operator+=(const Confusion& o) {
    tp += o.tp, tn += o.tn, fp += o.fp, fn += o.fn;
    return *this;
  }
  bool operator==(const Confusion&) const = default;
};

/// Counts over pixels with fov = 1; vessel is the positive class.
Confusion confusion(const BinaryMask& pred, const BinaryMask& gt, const BinaryMask& fov);

struct Metrics {
  double acc = 0.0;
  double sn = 0.0;
  double sp = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = std::numeric_limits<double>::quiet_NaN();
};

/// Precision is 0 when nothing is predicted positive and f1 is 0 when
/// precision + recall = 0. Sn (Sp) needs at least one vessel (background)
/// pixel and throws SingleClass otherwise.
Metrics metrics(const Confusion& c);

/// Probabilities and labels of the FOV pixels, in raster order.
void collect_fov(const ProbMap& prob, const BinaryMask& gt, const BinaryMask& fov, std::vector<double>& scores,
                 std::vector<std::uint8_t>& labels);

/// Mann-Whitney AUC with average ranks for ties.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct CurvePoint {
  double threshold = 0.0;
  double x = 0.0;
  double y = 0.0;
};

/// (FPR, TPR) from (0,0) at threshold +inf through one point per distinct
/// score, descending, to (1,1).
std::vector<CurvePoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// (recall, precision) from (0,1) at threshold +inf through one point per
/// distinct score, descending; the last point has recall 1.
std::vector<CurvePoint> pr_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

double trapezoid_area(std::span<const CurvePoint> curve);

struct FoldSpec {
  int k = 0;
  std::vector<std::vector<std::string>> folds;
  std::map<std::string, std::string> strata;  // id -> stratum
};

/// Seeded stratified partition: each stratum is shuffled and dealt
/// round-robin, the fold counter carrying over between strata. Ids without
/// a stratum entry share one stratum.
FoldSpec kfold_splits(std::span<const std::string> ids, const std::map<std::string, std::string>& strata, int k,
                      std::uint64_t seed);

/// One CSV row. Counts are doubles so a mean row fits the same shape.
struct MetricsRow {
  std::string id;
  double tp = 0, tn = 0, fp = 0, fn = 0;
  Metrics m;
};

MetricsRow make_row(const std::string& id, const Confusion& c, const Metrics& m);

/// Mean of every column across rows (counts included), labelled `id`.
MetricsRow mean_row(std::span<const MetricsRow> rows, const std::string& id);

void write_metrics_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path);
void write_curve_csv(std::span<const CurvePoint> curve, const std::filesystem::path& path);

}  // namespace vseg::eval
