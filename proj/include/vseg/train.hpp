#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "vseg/image_io.hpp"
#include "vseg/nn/model.hpp"
#include "vseg/patches.hpp"

namespace vseg::train {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  int patches_per_image = 2000;
  int patch_size = 48;
  double val_fraction = 0.10;
  bool augment = true;
  nn::ModelSpec model;
};

void validate(const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double seconds = 0.0;
};

using TrainHistory = std::vector<EpochRecord>;

struct Split {
  std::vector<patches::Patch> train;
  std::vector<patches::Patch> val;
};

/// Random patches from every image (per-image seeds derived from cfg.seed),
/// rotation-augmented when cfg.augment is set.
std::vector<patches::Patch> build_training_patches(std::span<const GrayImage> images,
                                                   std::span<const BinaryMask> labels, const TrainConfig& cfg);

/// Seeded disjoint split with |val| = round(val_fraction * n), kept within
/// [1, n-1].
Split split_train_val(std::vector<patches::Patch> all, double val_fraction, std::uint64_t seed);

struct Evaluation {
  double loss = 0.0;  // mean pixel cross-entropy
  double acc = 0.0;   // pixel accuracy at p(vessel) >= 0.5
};

/// Eval-mode loss and accuracy over a patch set.
Evaluation evaluate(const nn::Model<float>& model, std::span<const patches::Patch> set, std::size_t batch = 64);

/// He-initialised model for cfg.model.
nn::Model<float> make_model(const TrainConfig& cfg);

struct TrainResult {
  TrainHistory history;
  int best_epoch = 0;  // 0 when no epoch ran
  double best_val_loss = 0.0;
  std::vector<nn::Tensor<float>> best_parameters;  // snapshot at best_epoch
};

/// Copies a best_parameters snapshot back into the model.
void restore(nn::Model<float>& model, const std::vector<nn::Tensor<float>>& snapshot);

struct TrainOutputs {
  std::filesystem::path dir;  // empty: keep everything in memory
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Trains `model` in place. With an output dir, writes best.fcnw (lowest
/// validation loss), final.fcnw and history.csv there.
TrainResult train(nn::Model<float>& model, std::span<const patches::Patch> train_set,
                  std::span<const patches::Patch> val_set, const TrainConfig& cfg, const TrainOutputs& out = {});

void write_history(const TrainHistory& history, const std::filesystem::path& path);

/// Keeps freed activation buffers in the heap instead of returning them to
/// the kernel after every layer.
void tune_allocator();

}  // namespace vseg::train
