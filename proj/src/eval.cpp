#include "vseg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "vseg/error.hpp"
#include "vseg/patches.hpp"
#include "vseg/text_util.hpp"

namespace vseg::eval {

namespace {

void same_dims(int w1, int h1, int w2, int h2, const char* what) {
  if (w1 != w2 || h1 != h2)
    throw Error(ErrorCode::DimMismatch, std::string(what) + ": " + std::to_string(w1) + "x" + std::to_string(h1) +
                                            " vs " + std::to_string(w2) + "x" + std::to_string(h2));
}

struct Counts {
  long long pos = 0;
  long long neg = 0;
};

Counts check_scores(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size())
    throw Error(ErrorCode::DimMismatch, std::to_string(scores.size()) + " scores vs " +
                                            std::to_string(labels.size()) + " labels");
  Counts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw Error(ErrorCode::InvalidValue, "NaN score");
    (labels[i] ? c.pos : c.neg) += 1;
  }
  if (c.pos == 0 || c.neg == 0) throw Error(ErrorCode::SingleClass, "both classes must be present");
  return c;
}

std::vector<std::size_t> order_by_score(std::span<const double> scores, bool descending) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return idx;
}

// Walks distinct thresholds from the top, reporting cumulative (tp, fp).
template <typename F>
void sweep(std::span<const double> scores, std::span<const std::uint8_t> labels, F&& emit) {
  const auto idx = order_by_score(scores, true);
  long long tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    const double t = scores[idx[i]];
    for (; i < idx.size() && scores[idx[i]] == t; ++i) (labels[idx[i]] ? tp : fp) += 1;
    emit(t, tp, fp);
  }
}

}  // namespace

Confusion confusion(const BinaryMask& pred, const BinaryMask& gt, const BinaryMask& fov) {
  same_dims(pred.width, pred.height, gt.width, gt.height, "prediction vs ground truth");
  same_dims(fov.width, fov.height, gt.width, gt.height, "FOV vs ground truth");
  Confusion c;
  for (std::size_t i = 0; i < gt.data.size(); ++i) {
    if (!fov.data[i]) continue;
    const bool p = pred.data[i] != 0, g = gt.data[i] != 0;
    if (p && g) ++c.tp;
    else if (!p && !g) ++c.tn;
    else if (p) ++c.fp;
    else ++c.fn;
  }
  return c;
}

Metrics metrics(const Confusion& c) {
  if (c.total() == 0) throw Error(ErrorCode::EmptyFov, "no pixels inside the field of view");
  if (c.tp + c.fn == 0) throw Error(ErrorCode::SingleClass, "sensitivity undefined: no vessel pixels in the FOV");
  if (c.tn + c.fp == 0) throw Error(ErrorCode::SingleClass, "specificity undefined: no background pixels in the FOV");
  const auto d = [](long long v) { return static_cast<double>(v); };
  Metrics m;
  m.acc = d(c.tp + c.tn) / d(c.total());
  m.sn = d(c.tp) / d(c.tp + c.fn);
  m.sp = d(c.tn) / d(c.tn + c.fp);
  m.precision = c.tp + c.fp == 0 ? 0.0 : d(c.tp) / d(c.tp + c.fp);
  m.recall = m.sn;
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

void collect_fov(const ProbMap& prob, const BinaryMask& gt, const BinaryMask& fov, std::vector<double>& scores,
                 std::vector<std::uint8_t>& labels) {
  same_dims(prob.width, prob.height, gt.width, gt.height, "probability map vs ground truth");
  same_dims(fov.width, fov.height, gt.width, gt.height, "FOV vs ground truth");
  for (std::size_t i = 0; i < gt.data.size(); ++i) {
    if (!fov.data[i]) continue;
    scores.push_back(prob.data[i]);
    labels.push_back(gt.data[i] ? 1 : 0);
  }
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const Counts c = check_scores(scores, labels);
  const auto idx = order_by_score(scores, false);
  // twice the positive rank sum; tied groups share their average rank
  long long rank2 = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    long long pos = 0;
    for (; j < idx.size() && scores[idx[j]] == scores[idx[i]]; ++j) pos += labels[idx[j]] ? 1 : 0;
    rank2 += pos * static_cast<long long>(i + j + 1);
    i = j;
  }
  const long long u2 = rank2 - c.pos * (c.pos + 1);
  return static_cast<double>(u2) / (2.0 * static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

std::vector<CurvePoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const Counts c = check_scores(scores, labels);
  std::vector<CurvePoint> curve{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  sweep(scores, labels, [&](double t, long long tp, long long fp) {
    curve.push_back({t, static_cast<double>(fp) / static_cast<double>(c.neg),
                     static_cast<double>(tp) / static_cast<double>(c.pos)});
  });
  return curve;
}

std::vector<CurvePoint> pr_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const Counts c = check_scores(scores, labels);
  std::vector<CurvePoint> curve{{std::numeric_limits<double>::infinity(), 0.0, 1.0}};
  sweep(scores, labels, [&](double t, long long tp, long long fp) {
    curve.push_back({t, static_cast<double>(tp) / static_cast<double>(c.pos),
                     static_cast<double>(tp) / static_cast<double>(tp + fp)});
  });
  return curve;
}

double trapezoid_area(std::span<const CurvePoint> curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    area += (curve[i].x - curve[i - 1].x) * (curve[i].y + curve[i - 1].y) / 2.0;
  return area;
}

FoldSpec kfold_splits(std::span<const std::string> ids, const std::map<std::string, std::string>& strata, int k,
                      std::uint64_t seed) {
  if (k < 2 || static_cast<std::size_t>(k) > ids.size())
    throw Error(ErrorCode::BadK, "k = " + std::to_string(k) + " must lie in [2, " + std::to_string(ids.size()) + "]");
  std::set<std::string> seen;
  std::map<std::string, std::vector<std::string>> groups;
  FoldSpec spec;
  spec.k = k;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw Error(ErrorCode::InvalidArgument, "duplicate image id " + id);
    const auto it = strata.find(id);
    const std::string s = it == strata.end() ? std::string() : it->second;
    groups[s].push_back(id);
    spec.strata[id] = s;
  }
  spec.folds.assign(static_cast<std::size_t>(k), {});
  std::size_t counter = 0;
  std::uint64_t stream = 0;
  for (const auto& [name, members] : groups) {
    const auto order = patches::permutation(members.size(), mix_seed(seed, stream++));
    for (std::size_t i : order) spec.folds[counter++ % static_cast<std::size_t>(k)].push_back(members[i]);
  }
  return spec;
}

MetricsRow make_row(const std::string& id, const Confusion& c, const Metrics& m) {
  return {id, static_cast<double>(c.tp), static_cast<double>(c.tn), static_cast<double>(c.fp),
          static_cast<double>(c.fn), m};
}

MetricsRow mean_row(std::span<const MetricsRow> rows, const std::string& id) {
  if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "mean of no rows");
  MetricsRow r{id, 0, 0, 0, 0, Metrics{0, 0, 0, 0, 0, 0, 0}};
  for (const auto& x : rows) {
    r.tp += x.tp, r.tn += x.tn, r.fp += x.fp, r.fn += x.fn;
    r.m.acc += x.m.acc, r.m.sn += x.m.sn, r.m.sp += x.m.sp;
    r.m.precision += x.m.precision, r.m.recall += x.m.recall, r.m.f1 += x.m.f1, r.m.auc += x.m.auc;
  }
  const double n = static_cast<double>(rows.size());
  for (double* v : {&r.tp, &r.tn, &r.fp, &r.fn, &r.m.acc, &r.m.sn, &r.m.sp, &r.m.precision, &r.m.recall, &r.m.f1,
                    &r.m.auc})
    *v /= n;
  return r;
}

void write_metrics_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "image_id,TP,TN,FP,FN,acc,sn,sp,precision,recall,f1,auc\n";
  for (const auto& r : rows) {
    out << r.id;
    for (double v : {r.tp, r.tn, r.fp, r.fn, r.m.acc, r.m.sn, r.m.sp, r.m.precision, r.m.recall, r.m.f1, r.m.auc})
      out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

void write_curve_csv(std::span<const CurvePoint> curve, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "threshold,x,y\n";
  for (const auto& p : curve)
    out << format_double(p.threshold) << ',' << format_double(p.x) << ',' << format_double(p.y) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace vseg::eval
