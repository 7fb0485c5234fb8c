#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include "doctest.h"
#include "test_util.hpp"
#include "vseg/error.hpp"
#include "vseg/nn/weights_io.hpp"
#include "vseg/train.hpp"

using namespace vseg;
using vseg::patches::Patch;

namespace {

std::vector<Patch> tagged(std::size_t n) {
  std::vector<Patch> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].size = 1;
    out[i].data = {static_cast<float>(i)};
    out[i].label = {0};
  }
  return out;
}

// Square patches whose label is the bright half of a noisy gradient.
std::vector<Patch> toy_patches(std::size_t n, int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<Patch> out(n);
  for (auto& p : out) {
    p.size = size;
    const float cut = u(rng);
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c) {
        const bool vessel = static_cast<float>(c) / size > cut;
        p.data.push_back(vessel ? 0.2f + 0.1f * u(rng) : 0.7f + 0.1f * u(rng));
        p.label.push_back(vessel);
      }
  }
  return out;
}

train::TrainConfig tiny_config() {
  train::TrainConfig cfg;
  cfg.model.base_channels = 4;
  cfg.model.depth = 2;
  cfg.model.dropout = 0.0;
  cfg.patch_size = 8;
  cfg.batch_size = 4;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("split sizes and determinism") {
  auto big = train::split_train_val(tagged(160000), 0.10, 3);
  CHECK(big.train.size() == 144000);
  CHECK(big.val.size() == 16000);

  auto small = train::split_train_val(tagged(10), 0.10, 3);
  CHECK(small.train.size() == 9);
  CHECK(small.val.size() == 1);

  // disjoint and exhaustive
  std::multiset<float> seen;
  for (const auto& p : small.train) seen.insert(p.data[0]);
  for (const auto& p : small.val) seen.insert(p.data[0]);
  CHECK(seen == std::multiset<float>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});

  auto a = train::split_train_val(tagged(500), 0.2, 9);
  auto b = train::split_train_val(tagged(500), 0.2, 9);
  CHECK(a.val == b.val);
  CHECK(a.train == b.train);
  auto c = train::split_train_val(tagged(500), 0.2, 10);
  CHECK_FALSE(a.val == c.val);

  // tiny fractions still leave one patch on each side
  CHECK(train::split_train_val(tagged(3), 0.01, 1).val.size() == 1);
  CHECK(train::split_train_val(tagged(3), 0.99, 1).train.size() == 1);

  CHECK_THROWS_AS(train::split_train_val(tagged(1), 0.1, 1), Error);
  try {
    train::split_train_val(tagged(1), 0.1, 1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewPatches);
  }
}

TEST_CASE("training patch assembly") {
  GrayImage img(20, 20, 0.5);
  BinaryMask lab(20, 20, 1);
  auto cfg = tiny_config();
  cfg.patches_per_image = 7;
  const std::vector<GrayImage> imgs{img, img};
  const std::vector<BinaryMask> labs{lab, lab};
  CHECK(train::build_training_patches(imgs, labs, cfg).size() == 2 * 7 * 4);
  cfg.augment = false;
  const auto plain = train::build_training_patches(imgs, labs, cfg);
  CHECK(plain.size() == 14);
  // each image gets its own stream
  const bool same_stream =
      plain[0].origin == plain[7].origin && plain[1].origin == plain[8].origin && plain[2].origin == plain[9].origin;
  CHECK_FALSE(same_stream);
  CHECK(train::build_training_patches(imgs, labs, cfg) == plain);
}

TEST_CASE("config validation") {
  auto cfg = tiny_config();
  CHECK_NOTHROW(train::validate(cfg));
  auto bad = cfg;
  bad.val_fraction = 0.0;
  CHECK_THROWS_AS(train::validate(bad), Error);
  bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(train::validate(bad), Error);
  bad = cfg;
  bad.patch_size = 9;
  try {
    train::validate(bad);
    FAIL("expected IndivisibleInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IndivisibleInput);
  }
}

TEST_CASE("epochs = 0 keeps the initial model") {
  TempDir dir;
  auto cfg = tiny_config();
  cfg.epochs = 0;
  auto model = train::make_model(cfg);
  const auto before = nn::encode_model(model);
  const auto r = train::train(model, {}, {}, cfg, {dir.path(), {}});
  CHECK(r.history.empty());
  CHECK(r.best_epoch == 0);
  CHECK(nn::encode_model(model) == before);
  CHECK(read_bytes(dir.path() / "final.fcnw") == before);
  CHECK(std::filesystem::exists(dir.path() / "history.csv"));
  CHECK_FALSE(std::filesystem::exists(dir.path() / "best.fcnw"));
}

TEST_CASE("overfit smoke: 10 patches, 50 steps") {
  auto cfg = tiny_config();
  cfg.batch_size = 10;  // one step per epoch
  cfg.epochs = 50;
  cfg.lr = 3e-3;
  const auto set = toy_patches(10, 8, 5);
  auto model = train::make_model(cfg);
  const double initial = train::evaluate(model, set).loss;
  const auto r = train::train(model, set, set, cfg);
  REQUIRE(r.history.size() == 50);
  const double final_loss = train::evaluate(model, set).loss;
  MESSAGE("initial " << initial << " final " << final_loss);
  CHECK(final_loss <= 0.5 * initial);
  CHECK(r.history.back().train_loss <= 0.5 * r.history.front().train_loss);
}

TEST_CASE("identical config and seed give identical history and weights") {
  auto cfg = tiny_config();
  cfg.epochs = 3;
  cfg.model.dropout = 0.3;
  const auto tr = toy_patches(22, 8, 1), va = toy_patches(6, 8, 2);  // 22 % 4 != 0: tail batch kept
  auto run = [&] {
    auto m = train::make_model(cfg);
    auto r = train::train(m, tr, va, cfg);
    return std::make_pair(r, nn::encode_model(m));
  };
  const auto [r1, w1] = run();
  const auto [r2, w2] = run();
  REQUIRE(r1.history.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r1.history[i].train_loss == r2.history[i].train_loss);
    CHECK(r1.history[i].val_loss == r2.history[i].val_loss);
    CHECK(r1.history[i].val_acc == r2.history[i].val_acc);
  }
  CHECK(w1 == w2);
}

TEST_CASE("best checkpoint reloads to the recorded validation loss") {
  TempDir dir;
  auto cfg = tiny_config();
  cfg.epochs = 4;
  const auto tr = toy_patches(16, 8, 3), va = toy_patches(8, 8, 4);
  auto model = train::make_model(cfg);
  const auto r = train::train(model, tr, va, cfg, {dir.path(), {}});
  REQUIRE(r.best_epoch >= 1);
  double best = r.history[0].val_loss;
  for (const auto& h : r.history) best = std::min(best, h.val_loss);
  CHECK(r.best_val_loss == best);
  CHECK(r.history[static_cast<std::size_t>(r.best_epoch - 1)].val_loss == best);

  const auto reloaded = nn::load_model(dir.path() / "best.fcnw");
  CHECK(std::abs(train::evaluate(reloaded, va).loss - r.best_val_loss) <= 1e-6);

  auto restored = train::make_model(cfg);
  train::restore(restored, r.best_parameters);
  CHECK(nn::encode_model(restored) == nn::encode_model(reloaded));
  CHECK(nn::encode_model(nn::load_model(dir.path() / "final.fcnw")) == nn::encode_model(model));

  // history.csv: header + one row per epoch
  std::ifstream in(dir.path() / "history.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,train_loss,val_loss,val_acc,seconds");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
}

TEST_CASE("epoch shuffle is a permutation") {
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    auto p = patches::permutation(257, seed);
    std::sort(p.begin(), p.end());
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == i);
  }
}
