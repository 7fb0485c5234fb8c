#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "vseg/error.hpp"
#include "vseg/eval.hpp"
#include "../support/oracles.hpp"

using namespace vseg;
using namespace vseg::eval;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

BinaryMask mask(int w, int h, std::vector<std::uint8_t> v) {
  BinaryMask m(w, h);
  m.data = std::move(v);
  return m;
}

}  // namespace

TEST_CASE("confusion counts FOV pixels only") {
  std::mt19937 rng(3);
  BinaryMask gt(20, 12), fov(20, 12);
  int fov_count = 0;
  for (std::size_t i = 0; i < gt.data.size(); ++i) {
    gt.data[i] = rng() % 2;
    fov.data[i] = fov_count < 100 && rng() % 4 != 0;
    fov_count += fov.data[i];
  }
  REQUIRE(fov_count == 100);
  const auto same = confusion(gt, gt, fov);
  CHECK(same.fp == 0);
  CHECK(same.fn == 0);
  CHECK(same.tp + same.tn == 100);

  BinaryMask inv = gt;
  for (auto& v : inv.data) v = !v;
  const auto comp = confusion(inv, gt, fov);
  CHECK(comp.tp == 0);
  CHECK(comp.tn == 0);
  CHECK(comp.total() == 100);

  for (std::size_t i = 0; i < gt.data.size(); ++i)
    if (!fov.data[i]) {
      BinaryMask flipped = gt;
      flipped.data[i] = !flipped.data[i];
      REQUIRE(confusion(flipped, gt, fov) == same);
    }
  CHECK(code_of([&] { confusion(BinaryMask(3, 3), BinaryMask(3, 4), BinaryMask(3, 4)); }) == ErrorCode::DimMismatch);
}

TEST_CASE("metric formulas") {
  auto m = metrics({1, 1, 0, 0});
  CHECK(m.acc == 1.0);
  CHECK(m.f1 == 1.0);
  CHECK(metrics({3, 5, 2, 1}).sn == 0.75);
  // precision 4/5 = 0.8, recall 4/8 = 0.5
  m = metrics({4, 10, 1, 4});
  CHECK(m.precision == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(m.recall == 0.5);
  CHECK(m.f1 == doctest::Approx(8.0 / 13.0).epsilon(1e-15));
  CHECK(m.sp == doctest::Approx(10.0 / 11.0).epsilon(1e-15));

  // nothing predicted positive
  m = metrics({0, 5, 0, 3});
  CHECK(m.precision == 0.0);
  CHECK(m.f1 == 0.0);

  CHECK(code_of([] { metrics({}); }) == ErrorCode::EmptyFov);
  CHECK(code_of([] { metrics({0, 5, 1, 0}); }) == ErrorCode::SingleClass);
  CHECK(code_of([] { metrics({5, 0, 0, 1}); }) == ErrorCode::SingleClass);

  // acc is the prevalence-weighted mean of sn and sp
  std::mt19937 rng(8);
  for (int i = 0; i < 100; ++i) {
    Confusion c{1 + rng() % 50, 1 + rng() % 50, rng() % 50, rng() % 50};
    const auto r = metrics(c);
    const double pos = static_cast<double>(c.tp + c.fn), neg = static_cast<double>(c.tn + c.fp);
    CHECK(r.acc == doctest::Approx((r.sn * pos + r.sp * neg) / (pos + neg)).epsilon(1e-14));
    CHECK(r.acc >= std::min(r.sn, r.sp) - 1e-15);
    CHECK(r.acc <= std::max(r.sn, r.sp) + 1e-15);
    CHECK(r.sn == r.recall);
  }
}

TEST_CASE("auc examples") {
  const std::vector<double> s{0.9, 0.8, 0.3, 0.2};
  CHECK(auc(s, std::vector<std::uint8_t>{1, 1, 0, 0}) == 1.0);
  CHECK(auc(s, std::vector<std::uint8_t>{1, 0, 1, 0}) == 0.75);
  CHECK(auc(std::vector<double>(6, 0.4), std::vector<std::uint8_t>{1, 0, 0, 1, 0, 0}) == 0.5);
  CHECK(code_of([] { auc(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{1, 1}); }) ==
        ErrorCode::SingleClass);
  CHECK(code_of([] { auc(std::vector<double>{0.1}, std::vector<std::uint8_t>{1, 0}); }) == ErrorCode::DimMismatch);
}

TEST_CASE("rank AUC matches pair counting and the ROC trapezoid") {
  std::mt19937_64 rng(2024);
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 2 + rng() % 499;
    const int levels = 1 + static_cast<int>(rng() % 40);  // few levels force ties
    std::vector<double> s(n);
    std::vector<std::uint8_t> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % levels) / levels;
      l[i] = rng() % 3 == 0;
    }
    l[0] = 1, l[1] = 0;
    const double a = auc(s, l);
    REQUIRE(std::abs(a - oracle::pair_count_auc(s, l)) <= 1e-12);
    REQUIRE(std::abs(a - trapezoid_area(roc_curve(s, l))) <= 1e-12);
  }
}

TEST_CASE("curves") {
  const std::vector<double> s{0.9, 0.8, 0.3, 0.2};
  const std::vector<std::uint8_t> l{1, 1, 0, 0};
  const auto roc = roc_curve(s, l);
  CHECK(roc.size() == 5);
  CHECK(roc.front().x == 0.0);
  CHECK(roc.front().y == 0.0);
  CHECK(roc.back().x == 1.0);
  CHECK(roc.back().y == 1.0);
  CHECK(std::any_of(roc.begin(), roc.end(), [](const CurvePoint& p) { return p.x == 0.0 && p.y == 1.0; }));
  for (std::size_t i = 1; i < roc.size(); ++i) {
    CHECK(roc[i].threshold < roc[i - 1].threshold);
    CHECK(roc[i].x >= roc[i - 1].x);
  }
  const auto pr = pr_curve(s, l);
  CHECK(pr.back().x == 1.0);
  CHECK(pr.back().y == 0.5);
  CHECK(pr[1].y == 1.0);

  // one point per distinct score
  CHECK(roc_curve(std::vector<double>{0.5, 0.5, 0.1}, std::vector<std::uint8_t>{1, 0, 0}).size() == 3);

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> rs(10000);
  std::vector<std::uint8_t> rl(10000);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    rs[i] = u(rng);
    rl[i] = u(rng) < 0.3;
  }
  CHECK(std::abs(trapezoid_area(roc_curve(rs, rl)) - 0.5) <= 0.05);
}

TEST_CASE("stratified k-fold") {
  auto check_shape = [](int n, const std::string& a, const std::string& b, int k, std::size_t fold_size,
                        std::vector<std::pair<int, int>> allowed) {
    std::vector<std::string> ids;
    std::map<std::string, std::string> strata;
    for (int i = 0; i < n; ++i) {
      ids.push_back("img" + std::to_string(i));
      strata[ids.back()] = i < n / 2 ? a : b;
    }
    for (std::uint64_t seed : {1u, 2u, 3u, 42u}) {
      const auto spec = kfold_splits(ids, strata, k, seed);
      REQUIRE(spec.folds.size() == static_cast<std::size_t>(k));
      std::set<std::string> all;
      for (const auto& f : spec.folds) {
        CHECK(f.size() == fold_size);
        int ca = 0, cb = 0;
        for (const auto& id : f) {
          all.insert(id);
          (spec.strata.at(id) == a ? ca : cb) += 1;
        }
        CHECK(std::find(allowed.begin(), allowed.end(), std::make_pair(ca, cb)) != allowed.end());
      }
      CHECK(all.size() == ids.size());
      CHECK(kfold_splits(ids, strata, k, seed).folds == spec.folds);
    }
  };
  check_shape(20, "normal", "pathological", 5, 4, {{2, 2}});
  check_shape(28, "left", "right", 4, 7, {{3, 4}, {4, 3}});

  const std::vector<std::string> ids{"a", "b", "c"};
  CHECK(code_of([&] { kfold_splits(ids, {}, 1, 0); }) == ErrorCode::BadK);
  CHECK(code_of([&] { kfold_splits(ids, {}, 4, 0); }) == ErrorCode::BadK);
  CHECK(code_of([] { kfold_splits(std::vector<std::string>{"a", "a"}, {}, 2, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("mean row") {
  std::vector<MetricsRow> rows{make_row("f0", {1, 2, 3, 4}, metrics({1, 2, 3, 4})),
                               make_row("f1", {3, 2, 1, 0}, metrics({3, 2, 1, 0}))};
  rows[0].m.auc = 0.6;
  rows[1].m.auc = 0.8;
  const auto m = mean_row(rows, "mean");
  CHECK(m.id == "mean");
  CHECK(m.tp == 2.0);
  CHECK(m.fn == 2.0);
  CHECK(m.m.auc == doctest::Approx(0.7));
  CHECK(m.m.acc == doctest::Approx((rows[0].m.acc + rows[1].m.acc) / 2));
  CHECK(m.m.f1 == doctest::Approx((rows[0].m.f1 + rows[1].m.f1) / 2));
}
