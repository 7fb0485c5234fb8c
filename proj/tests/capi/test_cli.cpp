// Exit-code contract of the command-line tool.
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "../unit/test_util.hpp"

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(VSEG_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kTiny =
    " --model.base_channels 4 --train.epochs 1 --train.patches_per_image 10 --train.patch_size 16"
    " --infer.patch_size 16 --infer.stride 8";

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(run("") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("synth") == 1);
  CHECK(run("config --train.bogus 1") == 1);
  CHECK(run("config --train.epochs many") == 1);
  CHECK(run("config --infer.stride 100") == 1);
  CHECK(run("config --train.epochs") == 1);
  CHECK(run("--help") == 0);
  CHECK(run("config --train.epochs=3") == 0);
}

TEST_CASE("data errors exit with 2, success with 0") {
  TempDir dir;
  const std::string d = dir.path().string();
  CHECK(run("synth " + d + "/ds --synth.count 2 --synth.size 32") == 0);
  CHECK(run("predict " + d + "/missing.fcnw " + d + "/ds/images -o " + d + "/p") == 2);
  CHECK(run("train " + d + "/nothing " + d + "/run") == 2);
  CHECK(run("train " + d + "/ds " + d + "/run" + kTiny) == 0);
  CHECK(std::filesystem::exists(dir.path() / "run" / "best.fcnw"));
  CHECK(run("predict " + d + "/run/best.fcnw " + d + "/ds/images -o " + d + "/p" + kTiny) == 0);
  CHECK(run("evaluate " + d + "/p " + d + "/ds/labels " + d + "/ds/fov -o " + d + "/ev") == 0);
  CHECK(std::filesystem::exists(dir.path() / "ev" / "metrics.csv"));

  std::ofstream(dir.path() / "run.cfg") << "train.epochs = 1\nmodel.base_channels = 4\n";
  CHECK(run("config --config " + d + "/run.cfg") == 0);
  CHECK(run("config --config " + d + "/absent.cfg") == 1);
}

TEST_CASE("numeric abort exits with 3") {
  TempDir dir;
  const std::string d = dir.path().string();
  REQUIRE(run("synth " + d + "/ds --synth.count 2 --synth.size 32") == 0);
  CHECK(run("train " + d + "/ds " + d + "/run" + kTiny + " --train.epochs 3 --train.lr 1e30") == 3);
}
