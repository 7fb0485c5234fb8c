#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vseg/dataset.hpp"
#include "vseg/eval.hpp"
#include "vseg/infer.hpp"
#include "vseg/preprocess.hpp"
#include "vseg/train.hpp"

namespace vseg::eval {

/// Trains one model per fold on the remaining folds (preprocessing stats
/// fitted on those training images only) and scores the held-out fold with
/// pooled FOV pixels. Returns k fold rows followed by their mean.
std::vector<MetricsRow> crossval(const Dataset& ds, const prep::PreprocessParams& prep_params,
                                 const train::TrainConfig& train_cfg, const infer::InferConfig& infer_cfg,
                                 const FoldSpec& folds, const std::function<void(const std::string&)>& log = {});

}  // namespace vseg::eval
