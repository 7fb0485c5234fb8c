#include "vseg/app.hpp"

#include <chrono>
#include <fstream>

#include "vseg/crossval.hpp"
#include "vseg/dataset.hpp"
#include "vseg/error.hpp"
#include "vseg/eval.hpp"
#include "vseg/nn/weights_io.hpp"
#include "vseg/text_util.hpp"

namespace fs = std::filesystem;

namespace vseg::app {

namespace {

void say(const Log& log, const std::string& line) {
  if (log) log(line);
}

void prepare_out(const RunConfig& cfg, const fs::path& out) {
  cfg.check();
  fs::create_directories(out);
  cfg.write(out / "run_config.txt");
}

// Prefixes an error with the file it concerns, keeping the code.
template <typename F>
auto for_file(const std::string& what, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), what + ": " + e.detail());
  }
}

std::vector<RgbImage> images_of(const Dataset& ds) {
  std::vector<RgbImage> v;
  for (const auto& s : ds.samples) v.push_back(s.image);
  return v;
}

}  // namespace

void cmd_preprocess(const RunConfig& cfg, const fs::path& dataset, const fs::path& out, const Log& log) {
  cfg.check();
  const auto ids = list_ids(dataset / "images", ".ppm");
  if (ids.empty()) throw Error(ErrorCode::EmptyDataset, "no .ppm images in " + (dataset / "images").string());
  std::vector<RgbImage> images;
  for (const auto& id : ids)
    images.push_back(for_file(id + ".ppm", [&] { return read_ppm(dataset / "images" / (id + ".ppm")); }));
  const auto result = prep::preprocess_pipeline(images, cfg.preprocess());
  prepare_out(cfg, out);
  for (std::size_t i = 0; i < ids.size(); ++i) write_gray8(result.images[i], out / (ids[i] + ".pgm"));
  prep::write_stats(result.stats, out / "stats.txt");
  say(log, "preprocessed " + std::to_string(ids.size()) + " images into " + out.string());
}

void cmd_train(const RunConfig& cfg, const fs::path& dataset, const fs::path& out, const Log& log) {
  cfg.check();
  const auto tc = cfg.train();
  const Dataset ds = load_dataset(dataset);
  const auto prepped = prep::preprocess_pipeline(images_of(ds), cfg.preprocess());
  std::vector<BinaryMask> labels;
  for (const auto& s : ds.samples) labels.push_back(s.label);
  prepare_out(cfg, out);
  prep::write_stats(prepped.stats, out / "stats.txt");

  auto split = train::split_train_val(train::build_training_patches(prepped.images, labels, tc), tc.val_fraction,
                                      tc.seed);
  say(log, std::to_string(split.train.size()) + " training / " + std::to_string(split.val.size()) +
               " validation patches from " + std::to_string(ds.samples.size()) + " images");
  auto model = train::make_model(tc);
  say(log, std::string(nn::architecture_name(tc.model.arch)) + " with " + std::to_string(model.parameter_count()) +
               " parameters");
  train::TrainOutputs outputs{out, [&](const train::EpochRecord& r) {
                                say(log, "epoch " + std::to_string(r.epoch) + "/" + std::to_string(tc.epochs) +
                                             " train_loss " + format_fixed(r.train_loss, 5) + " val_loss " +
                                             format_fixed(r.val_loss, 5) + " val_acc " + format_fixed(r.val_acc, 4) +
                                             " (" + format_fixed(r.seconds, 1) + " s)");
                              }};
  const auto result = train::train(model, split.train, split.val, tc, outputs);
  if (result.best_epoch > 0)
    say(log, "best epoch " + std::to_string(result.best_epoch) + " val_loss " + format_double(result.best_val_loss));
}

std::vector<PredictTiming> cmd_predict(const RunConfig& cfg, const fs::path& checkpoint,
                                       const std::vector<fs::path>& inputs, const fs::path& stats,
                                       const fs::path& out, const Log& log) {
  cfg.check();
  if (!fs::exists(checkpoint)) throw Error(ErrorCode::IoFailure, "checkpoint not found: " + checkpoint.string());
  const auto model = for_file(checkpoint.string(), [&] { return nn::load_model(checkpoint); });
  const fs::path stats_path = stats.empty() ? checkpoint.parent_path() / "stats.txt" : stats;
  const auto ds = for_file(stats_path.string(), [&] { return prep::read_stats(stats_path); });

  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& id : list_ids(in, ".ppm")) files.push_back(in / (id + ".ppm"));
    } else if (fs::exists(in)) {
      files.push_back(in);
    } else {
      throw Error(ErrorCode::IoFailure, "input not found: " + in.string());
    }
  }
  if (files.empty()) throw Error(ErrorCode::EmptyDataset, "no input images");

  prepare_out(cfg, out);
  fs::create_directories(out / "prob");
  fs::create_directories(out / "mask");
  const auto pp = cfg.preprocess();
  const auto ic = cfg.infer();
  std::vector<PredictTiming> timings;
  for (const auto& f : files) {
    const std::string id = f.stem().string();
    const RgbImage rgb = for_file(f.string(), [&] { return read_ppm(f); });
    const auto t0 = std::chrono::steady_clock::now();
    const auto prob = for_file(id, [&] { return infer::predict_image(model, prep::apply_pipeline(rgb, ds, pp), ic); });
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_prob_map(prob, out / "prob" / (id + ".pgm"));
    write_mask(infer::binarize(prob, ic.threshold), out / "mask" / (id + ".pgm"));
    timings.push_back({id, secs});
    say(log, id + "\t" + format_fixed(secs, 3) + " s");
  }
  return timings;
}

void cmd_evaluate(const RunConfig& cfg, const fs::path& pred_dir, const fs::path& gt_dir, const fs::path& fov_dir,
                  const fs::path& out, const Log& log) {
  cfg.check();
  const fs::path probs = fs::is_directory(pred_dir / "prob") ? pred_dir / "prob" : pred_dir;
  const auto ids = list_ids(probs, ".pgm");
  if (ids.empty()) throw Error(ErrorCode::EmptyDataset, "no predictions in " + probs.string());
  const double threshold = cfg.infer().threshold;

  std::vector<eval::MetricsRow> rows;
  eval::Confusion pooled;
  std::vector<double> all_scores;
  std::vector<std::uint8_t> all_labels;
  for (const auto& id : ids) {
    const std::string file = id + ".pgm";
    for_file(file, [&] {
      const auto prob = read_prob_map(probs / file);
      const auto gt = read_mask(gt_dir / file);
      const auto fov = read_mask(fov_dir / file);
      const auto c = eval::confusion(infer::binarize(prob, threshold), gt, fov);
      std::vector<double> scores;
      std::vector<std::uint8_t> labels;
      eval::collect_fov(prob, gt, fov, scores, labels);
      auto m = eval::metrics(c);
      m.auc = eval::auc(scores, labels);
      rows.push_back(eval::make_row(id, c, m));
      pooled += c;
      all_scores.insert(all_scores.end(), scores.begin(), scores.end());
      all_labels.insert(all_labels.end(), labels.begin(), labels.end());
      return 0;
    });
  }
  auto m = eval::metrics(pooled);
  m.auc = eval::auc(all_scores, all_labels);
  rows.push_back(eval::make_row("all", pooled, m));

  prepare_out(cfg, out);
  eval::write_metrics_csv(rows, out / "metrics.csv");
  eval::write_curve_csv(eval::roc_curve(all_scores, all_labels), out / "roc.csv");
  eval::write_curve_csv(eval::pr_curve(all_scores, all_labels), out / "pr.csv");
  say(log, "pooled over " + std::to_string(ids.size()) + " images: acc " + format_fixed(m.acc, 4) + " sn " +
               format_fixed(m.sn, 4) + " sp " + format_fixed(m.sp, 4) + " f1 " + format_fixed(m.f1, 4) + " auc " +
               format_fixed(m.auc, 4));
}

void cmd_crossval(const RunConfig& cfg, const fs::path& dataset, const fs::path& strata, int k, const fs::path& out,
                  const Log& log) {
  cfg.check();
  Dataset ds = load_dataset(dataset);
  if (!strata.empty()) ds.strata = read_strata(strata);
  std::vector<std::string> ids;
  for (const auto& s : ds.samples) ids.push_back(s.id);
  const auto folds = eval::kfold_splits(ids, ds.strata, k > 0 ? k : cfg.crossval_k(), cfg.crossval_seed());
  prepare_out(cfg, out);
  {
    std::ofstream f(out / "folds.txt", std::ios::trunc);
    for (std::size_t i = 0; i < folds.folds.size(); ++i)
      for (const auto& id : folds.folds[i]) f << i << '\t' << id << '\t' << folds.strata.at(id) << '\n';
    if (!f) throw Error(ErrorCode::IoFailure, "write failed for " + (out / "folds.txt").string());
  }
  const auto rows = eval::crossval(ds, cfg.preprocess(), cfg.train(), cfg.infer(), folds,
                                   [&](const std::string& line) { say(log, line); });
  eval::write_metrics_csv(rows, out / "crossval.csv");
  const auto& mean = rows.back();
  say(log, "mean over " + std::to_string(folds.k) + " folds: acc " + format_fixed(mean.m.acc, 4) + " auc " +
               format_fixed(mean.m.auc, 4));
}

void cmd_synth(const RunConfig& cfg, const fs::path& out, const Log& log) {
  cfg.check();
  const auto samples = synth::generate(cfg.synth());
  prepare_out(cfg, out);
  write_dataset(samples, {}, out);
  say(log, "wrote " + std::to_string(samples.size()) + " synthetic images to " + out.string());
}

}  // namespace vseg::app
