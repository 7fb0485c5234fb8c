// vesselseg command-line front end. Talks to the library through the C API only.
//
//   vesselseg <command> [args] [--config FILE] [--<key> VALUE | --<key>=VALUE ...]
//
// Any flag whose name contains a dot is a config override (e.g. --train.epochs 3).

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "vseg/vseg.h"

namespace {

struct Override {
  std::string key, value;
};

void print_line(const char* line, void*) {
  std::printf("%s\n", line);
  std::fflush(stdout);
}

int report(vseg_status s) {
  if (s != VSEG_OK) std::fprintf(stderr, "error: %s\n", vseg_last_error());
  return vseg_status_exit_code(s);
}

// Pulls dotted overrides out of argv; everything else goes to CLI11.
bool split_overrides(int argc, char** argv, std::vector<std::string>& rest, std::vector<Override>& overrides) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    const auto eq = a.find('=');
    const std::string name = a.substr(0, eq);
    if (a.rfind("--", 0) != 0 || name.find('.') == std::string::npos) {
      rest.push_back(a);
      continue;
    }
    if (eq != std::string::npos) {
      overrides.push_back({name.substr(2), a.substr(eq + 1)});
    } else if (i + 1 < argc) {
      overrides.push_back({name.substr(2), argv[++i]});
    } else {
      std::fprintf(stderr, "error: %s needs a value\n", a.c_str());
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> rest;
  std::vector<Override> overrides;
  if (!split_overrides(argc, argv, rest, overrides)) return 1;

  CLI::App app{"Retinal vessel segmentation with patch-based U-Net and LadderNet models"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_file;
  app.add_option("--config", config_file, "config file of `key = value` lines")->check(CLI::ExistingFile);
  app.footer("Config keys can be overridden as --<key> VALUE, e.g. --train.epochs 3 --infer.stride 10.");

  std::string dataset, out, checkpoint, stats, pred_dir, gt_dir, fov_dir, strata;
  std::vector<std::string> inputs;
  int k = 0;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("out", out, "output dataset directory")->required();

  auto* prep = app.add_subcommand("preprocess", "write preprocessed images and dataset statistics");
  prep->add_option("dataset", dataset, "dataset root")->required();
  prep->add_option("out", out, "output directory")->required();

  auto* train = app.add_subcommand("train", "train a model on a dataset");
  train->add_option("dataset", dataset, "dataset root")->required();
  train->add_option("out", out, "run directory for checkpoints and history")->required();

  auto* predict = app.add_subcommand("predict", "predict vessel maps for images");
  predict->add_option("checkpoint", checkpoint, "weights file (.fcnw)")->required();
  predict->add_option("inputs", inputs, ".ppm images or directories of them")->required();
  predict->add_option("-o,--out", out, "output directory")->required();
  predict->add_option("--stats", stats, "dataset statistics (default: stats.txt beside the checkpoint)");

  auto* evaluate = app.add_subcommand("evaluate", "score probability maps against ground truth");
  evaluate->add_option("pred", pred_dir, "directory of probability maps")->required();
  evaluate->add_option("gt", gt_dir, "directory of vessel masks")->required();
  evaluate->add_option("fov", fov_dir, "directory of FOV masks")->required();
  evaluate->add_option("-o,--out", out, "output directory")->required();

  auto* crossval = app.add_subcommand("crossval", "stratified k-fold cross-validation");
  crossval->add_option("dataset", dataset, "dataset root")->required();
  crossval->add_option("-o,--out", out, "output directory")->required();
  crossval->add_option("--strata", strata, "strata file (default: <dataset>/strata.txt)");
  crossval->add_option("--k", k, "number of folds (default: crossval.k)");

  auto* show = app.add_subcommand("config", "print the effective configuration");

  std::vector<std::string> reversed(rest.rbegin(), rest.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  vseg_config* cfg = nullptr;
  if (vseg_status s = vseg_config_create(&cfg); s != VSEG_OK) return report(s);
  struct Free {
    vseg_config* c;
    ~Free() { vseg_config_destroy(c); }
  } free_cfg{cfg};

  if (!config_file.empty())
    if (vseg_status s = vseg_config_load(cfg, config_file.c_str()); s != VSEG_OK) return report(s);
  for (const auto& o : overrides)
    if (vseg_status s = vseg_config_set(cfg, o.key.c_str(), o.value.c_str()); s != VSEG_OK) return report(s);
  if (vseg_status s = vseg_config_check(cfg); s != VSEG_OK) return report(s);

  vseg_status s = VSEG_OK;
  if (*synth) {
    s = vseg_synth(cfg, out.c_str(), print_line, nullptr);
  } else if (*prep) {
    s = vseg_preprocess(cfg, dataset.c_str(), out.c_str(), print_line, nullptr);
  } else if (*train) {
    s = vseg_train(cfg, dataset.c_str(), out.c_str(), print_line, nullptr);
  } else if (*predict) {
    std::vector<const char*> ptrs;
    for (const auto& i : inputs) ptrs.push_back(i.c_str());
    s = vseg_predict(cfg, checkpoint.c_str(), ptrs.data(), ptrs.size(), stats.empty() ? nullptr : stats.c_str(),
                     out.c_str(), print_line, nullptr);
  } else if (*evaluate) {
    s = vseg_evaluate(cfg, pred_dir.c_str(), gt_dir.c_str(), fov_dir.c_str(), out.c_str(), print_line, nullptr);
  } else if (*crossval) {
    s = vseg_crossval(cfg, dataset.c_str(), strata.empty() ? nullptr : strata.c_str(), k, out.c_str(), print_line,
                      nullptr);
  } else if (*show) {
    size_t n = 0;
    s = vseg_config_dump(cfg, nullptr, 0, &n);
    if (s == VSEG_OK) {
      std::string text(n, '\0');
      s = vseg_config_dump(cfg, text.data(), n, &n);
      std::fputs(text.c_str(), stdout);
    }
  }
  return report(s);
}
