#include "vseg/crossval.hpp"

#include <set>

#include "vseg/error.hpp"
#include "vseg/text_util.hpp"

namespace vseg::eval {

std::vector<MetricsRow> crossval(const Dataset& ds, const prep::PreprocessParams& prep_params,
                                 const train::TrainConfig& train_cfg, const infer::InferConfig& infer_cfg,
                                 const FoldSpec& folds, const std::function<void(const std::string&)>& log) {
  std::map<std::string, const Sample*> by_id;
  for (const auto& s : ds.samples) by_id[s.id] = &s;
  for (const auto& fold : folds.folds)
    for (const auto& id : fold)
      if (!by_id.count(id)) throw Error(ErrorCode::LayoutError, "fold refers to unknown image " + id);

  std::vector<MetricsRow> rows;
  for (std::size_t f = 0; f < folds.folds.size(); ++f) {
    const std::set<std::string> held(folds.folds[f].begin(), folds.folds[f].end());
    std::vector<RgbImage> train_rgb;
    std::vector<BinaryMask> train_labels;
    for (const auto& s : ds.samples)
      if (!held.count(s.id)) {
        train_rgb.push_back(s.image);
        train_labels.push_back(s.label);
      }
    if (train_rgb.empty()) throw Error(ErrorCode::EmptyDataset, "fold " + std::to_string(f) + " leaves no training images");

    train::TrainConfig cfg = train_cfg;
    cfg.seed = mix_seed(train_cfg.seed, 0xf01d0000u + f);
    const auto prepped = prep::preprocess_pipeline(train_rgb, prep_params);
    auto all = train::build_training_patches(prepped.images, train_labels, cfg);
    auto split = train::split_train_val(std::move(all), cfg.val_fraction, cfg.seed);
    auto model = train::make_model(cfg);
    const auto fold_name = "fold" + std::to_string(f);
    train::TrainOutputs out;
    if (log)
      out.on_epoch = [&](const train::EpochRecord& r) {
        log(fold_name + " epoch " + std::to_string(r.epoch) + " train_loss " + format_double(r.train_loss) +
            " val_loss " + format_double(r.val_loss));
      };
    const auto result = train::train(model, split.train, split.val, cfg, out);
    if (!result.best_parameters.empty()) train::restore(model, result.best_parameters);

    Confusion pooled;
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (const auto& id : folds.folds[f]) {
      const Sample& s = *by_id[id];
      const auto prob = infer::predict_image(model, prep::apply_pipeline(s.image, prepped.stats, prep_params), infer_cfg);
      pooled += confusion(infer::binarize(prob, infer_cfg.threshold), s.label, s.fov);
      collect_fov(prob, s.label, s.fov, scores, labels);
    }
    Metrics m = metrics(pooled);
    m.auc = auc(scores, labels);
    rows.push_back(make_row(fold_name, pooled, m));
    if (log) log(fold_name + " auc " + format_double(m.auc) + " acc " + format_double(m.acc));
  }
  rows.push_back(mean_row(rows, "mean"));
  return rows;
}

}  // namespace vseg::eval
