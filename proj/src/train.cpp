#include "vseg/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "vseg/error.hpp"
#include "vseg/nn/optim.hpp"
#include "vseg/nn/weights_io.hpp"
#include "vseg/text_util.hpp"

namespace vseg::train {

using patches::Patch;

namespace {

// independent random streams derived from the run seed
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kSplitStream = 2;
constexpr std::uint64_t kImageStream = 1000;
constexpr std::uint64_t kShuffleStream = 1u << 20;
constexpr std::uint64_t kDropoutStream = 1u << 30;

struct Batch {
  nn::Tensor<float> x;
  std::vector<std::uint8_t> labels;
};

Batch assemble(std::span<const Patch> set, const std::vector<std::size_t>* order, std::size_t start, std::size_t len) {
  const std::size_t s = static_cast<std::size_t>(set[0].size);
  const std::size_t area = s * s;
  Batch b{nn::Tensor<float>({len, 1, s, s}), std::vector<std::uint8_t>(len * area)};
  for (std::size_t i = 0; i < len; ++i) {
    const Patch& p = set[order ? (*order)[start + i] : start + i];
    if (p.data.size() != area || p.label.size() != area)
      throw Error(ErrorCode::ShapeMismatch, "training patches must all be " + std::to_string(s) + "x" +
                                                std::to_string(s) + " with labels");
    std::copy(p.data.begin(), p.data.end(), b.x.data() + i * area);
    std::copy(p.label.begin(), p.label.end(), b.labels.begin() + static_cast<std::ptrdiff_t>(i * area));
  }
  return b;
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 0) throw Error(ErrorCode::InvalidValue, "train.epochs must be >= 0");
  if (cfg.batch_size < 1) throw Error(ErrorCode::InvalidValue, "train.batch_size must be >= 1");
  if (!(cfg.lr > 0.0) || !std::isfinite(cfg.lr)) throw Error(ErrorCode::InvalidValue, "train.lr must be > 0");
  if (cfg.patches_per_image < 0) throw Error(ErrorCode::InvalidValue, "train.patches_per_image must be >= 0");
  if (cfg.patch_size < 1) throw Error(ErrorCode::InvalidValue, "train.patch_size must be >= 1");
  if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0))
    throw Error(ErrorCode::InvalidValue, "train.val_fraction must lie in (0,1)");
  const int factor = 1 << (cfg.model.depth - 1);
  if (cfg.model.depth >= 1 && cfg.patch_size % factor)
    throw Error(ErrorCode::IndivisibleInput, "train.patch_size " + std::to_string(cfg.patch_size) +
                                                 " not divisible by " + std::to_string(factor));
}

std::vector<Patch> build_training_patches(std::span<const GrayImage> images, std::span<const BinaryMask> labels,
                                          const TrainConfig& cfg) {
  if (images.size() != labels.size())
    throw Error(ErrorCode::DimMismatch, "image and label counts differ");
  std::vector<Patch> all;
  for (std::size_t i = 0; i < images.size(); ++i) {
    auto ps = patches::extract_random_patches(images[i], labels[i], cfg.patches_per_image, cfg.patch_size,
                                              mix_seed(cfg.seed, kImageStream + i));
    if (cfg.augment) ps = patches::rotate_augment(ps);
    for (auto& p : ps) all.push_back(std::move(p));
  }
  return all;
}

Split split_train_val(std::vector<Patch> all, double val_fraction, std::uint64_t seed) {
  const std::size_t n = all.size();
  if (n < 2) throw Error(ErrorCode::TooFewPatches, "need at least 2 patches to split, got " + std::to_string(n));
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw Error(ErrorCode::InvalidValue, "val_fraction must lie in (0,1)");
  auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  const auto order = patches::permutation(n, mix_seed(seed, kSplitStream));
  Split s;
  s.val.reserve(n_val);
  s.train.reserve(n - n_val);
  for (std::size_t i = 0; i < n; ++i) (i < n_val ? s.val : s.train).push_back(std::move(all[order[i]]));
  return s;
}

Evaluation evaluate(const nn::Model<float>& model, std::span<const Patch> set, std::size_t batch) {
  if (set.empty()) throw Error(ErrorCode::TooFewPatches, "evaluation set is empty");
  if (batch == 0) batch = 1;
  double loss_sum = 0.0;
  std::size_t correct = 0, pixels = 0;
  for (std::size_t start = 0; start < set.size(); start += batch) {
    const std::size_t len = std::min(batch, set.size() - start);
    const Batch b = assemble(set, nullptr, start, len);
    const auto logits = model.predict(b.x, batch);
    loss_sum += nn::softmax_xent(logits, b.labels).loss * static_cast<double>(b.labels.size());
    const auto p = nn::softmax_channel(logits, 1);
    for (std::size_t i = 0; i < p.size(); ++i) correct += (p[i] >= 0.5f) == (b.labels[i] != 0);
    pixels += b.labels.size();
  }
  return {loss_sum / static_cast<double>(pixels), static_cast<double>(correct) / static_cast<double>(pixels)};
}

nn::Model<float> make_model(const TrainConfig& cfg) {
  auto model = nn::build_model<float>(cfg.model);
  model.init_weights(mix_seed(cfg.seed, kInitStream));
  return model;
}

void write_history(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "epoch,train_loss,val_loss,val_acc,seconds\n";
  for (const auto& r : history)
    out << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss) << ','
        << format_double(r.val_acc) << ',' << format_fixed(r.seconds, 3) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

void restore(nn::Model<float>& model, const std::vector<nn::Tensor<float>>& snapshot) {
  auto& params = model.parameters();
  if (snapshot.size() != params.size()) throw Error(ErrorCode::ShapeMismatch, "snapshot does not match the model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (snapshot[i].shape() != params[i].value.shape())
      throw Error(ErrorCode::ShapeMismatch, "snapshot shape differs for " + params[i].name);
    params[i].value = snapshot[i];
  }
}

void tune_allocator() {
#if defined(__GLIBC__)
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)done;
#endif
}

TrainResult train(nn::Model<float>& model, std::span<const Patch> train_set, std::span<const Patch> val_set,
                  const TrainConfig& cfg, const TrainOutputs& out) {
  validate(cfg);
  TrainResult result;
  if (!out.dir.empty()) std::filesystem::create_directories(out.dir);
  if (cfg.epochs == 0) {
    if (!out.dir.empty()) {
      nn::save_weights(model, out.dir / "final.fcnw");
      write_history(result.history, out.dir / "history.csv");
    }
    return result;
  }
  if (train_set.empty() || val_set.empty())
    throw Error(ErrorCode::TooFewPatches, "training needs non-empty training and validation sets");
  tune_allocator();

  auto adam = nn::make_adam(model.parameters(), cfg.lr);
  const std::size_t n = train_set.size();
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  std::uint64_t step = 0;
  nn::Tape<float> tape;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto order = patches::permutation(n, mix_seed(cfg.seed, kShuffleStream + epoch));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t len = std::min(bs, n - start);
      const Batch b = assemble(train_set, &order, start, len);
      const auto& logits = model.forward(b.x, tape, nn::Mode::train, mix_seed(cfg.seed, kDropoutStream + step));
      const auto loss = nn::softmax_xent(logits, b.labels);
      loss_sum += loss.loss * static_cast<double>(len);
      model.zero_grad();
      model.backward(tape, loss.grad);
      nn::adam_step(model.parameters(), adam);
      ++step;
    }
    tape = {};

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n);
    const Evaluation ev = evaluate(model, val_set);
    rec.val_loss = ev.loss;
    rec.val_acc = ev.acc;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(rec);

    if (result.best_epoch == 0 || rec.val_loss < result.best_val_loss) {
      result.best_epoch = epoch;
      result.best_val_loss = rec.val_loss;
      result.best_parameters.clear();
      for (const auto& p : model.parameters()) result.best_parameters.push_back(p.value);
      if (!out.dir.empty()) nn::save_weights(model, out.dir / "best.fcnw");
    }
    if (!out.dir.empty()) write_history(result.history, out.dir / "history.csv");
    if (out.on_epoch) out.on_epoch(rec);
  }
  if (!out.dir.empty()) nn::save_weights(model, out.dir / "final.fcnw");
  return result;
}

}  // namespace vseg::train
