#pragma once

// The six pipeline commands. Each writes its effective configuration to
// `<out>/run_config.txt` so the run can be repeated from that file alone.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "vseg/config.hpp"

namespace vseg::app {

using Log = std::function<void(const std::string&)>;

/// out/<id>.pgm (8-bit preprocessed image) for every input plus out/stats.txt.
void cmd_preprocess(const RunConfig& cfg, const std::filesystem::path& dataset, const std::filesystem::path& out,
                    const Log& log = {});

/// out/{best,final}.fcnw, out/history.csv and out/stats.txt.
void cmd_train(const RunConfig& cfg, const std::filesystem::path& dataset, const std::filesystem::path& out,
               const Log& log = {});

struct PredictTiming {
  std::string id;
  double seconds = 0.0;  // preprocessing + inference
};

/// `inputs` are .ppm files or directories of them. Stats default to
/// stats.txt next to the checkpoint. Writes out/prob/<id>.pgm (16-bit) and
/// out/mask/<id>.pgm.
std::vector<PredictTiming> cmd_predict(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                                       const std::vector<std::filesystem::path>& inputs,
                                       const std::filesystem::path& stats, const std::filesystem::path& out,
                                       const Log& log = {});

/// Per-image rows plus a pooled "all" row in out/metrics.csv; pooled curves
/// in out/roc.csv and out/pr.csv. A `prob/` subdirectory of pred_dir is used
/// when present.
void cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                  const std::filesystem::path& fov_dir, const std::filesystem::path& out, const Log& log = {});

/// k fold rows plus their mean in out/crossval.csv, fold membership in
/// out/folds.txt. An empty strata path uses the dataset's strata.txt; k = 0
/// takes crossval.k.
void cmd_crossval(const RunConfig& cfg, const std::filesystem::path& dataset, const std::filesystem::path& strata,
                  int k, const std::filesystem::path& out, const Log& log = {});

/// Synthetic dataset in the standard layout.
void cmd_synth(const RunConfig& cfg, const std::filesystem::path& out, const Log& log = {});

}  // namespace vseg::app
