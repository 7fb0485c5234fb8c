#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "test_util.hpp"
#include "vseg/dataset.hpp"
#include "vseg/error.hpp"
#include "vseg/synth.hpp"

using namespace vseg;

TEST_CASE("generation is deterministic") {
  synth::SynthConfig cfg;
  cfg.count = 3;
  const auto a = synth::generate(cfg);
  const auto b = synth::generate(cfg);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].image == b[i].image);
    CHECK(a[i].label == b[i].label);
    CHECK(a[i].fov == b[i].fov);
  }
  CHECK(a[0].id == "synth_000");
  CHECK_FALSE(a[0].label == a[1].label);
  cfg.seed = 2;
  CHECK_FALSE(synth::generate_one(cfg, 0).image == a[0].image);
}

TEST_CASE("vessel statistics over 100 seeds") {
  synth::SynthConfig cfg;
  double min_frac = 1.0, max_frac = 0.0, min_gap = 1e9;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    cfg.seed = seed;
    const auto s = synth::generate_one(cfg, 0);
    REQUIRE(s.image.width == 128);
    REQUIRE(s.label.data.size() == 128u * 128u);
    double vessel = 0, fov = 0, vsum = 0, bsum = 0;
    for (std::size_t i = 0; i < s.fov.data.size(); ++i) {
      if (!s.fov.data[i]) {
        REQUIRE(s.label.data[i] == 0);
        continue;
      }
      const auto* px = &s.image.data[3 * i];
      const double mean = (px[0] + px[1] + px[2]) / 3.0;
      fov += 1;
      if (s.label.data[i]) {
        vessel += 1;
        vsum += mean;
      } else {
        bsum += mean;
      }
    }
    REQUIRE(vessel > 0);
    min_frac = std::min(min_frac, vessel / fov);
    max_frac = std::max(max_frac, vessel / fov);
    min_gap = std::min(min_gap, bsum / (fov - vessel) - vsum / vessel);
  }
  MESSAGE("vessel fraction " << min_frac << ".." << max_frac << ", min gap " << min_gap);
  CHECK(min_frac >= 0.02);
  CHECK(max_frac <= 0.20);
  CHECK(min_gap > cfg.noise_sigma);
}

TEST_CASE("config validation") {
  synth::SynthConfig cfg;
  cfg.size = 126;
  CHECK_THROWS_AS(synth::validate(cfg), Error);
  cfg = {};
  cfg.count = 0;
  CHECK_THROWS_AS(synth::validate(cfg), Error);
  cfg = {};
  cfg.width_min = 5;
  CHECK_THROWS_AS(synth::validate(cfg), Error);
}

TEST_CASE("dataset layout round trip") {
  TempDir dir;
  synth::SynthConfig cfg;
  cfg.count = 3;
  cfg.size = 32;
  const auto samples = synth::generate(cfg);
  const std::map<std::string, std::string> strata{{"synth_000", "a"}, {"synth_001", "b"}};
  write_dataset(samples, strata, dir.path());
  const auto ds = load_dataset(dir.path());
  REQUIRE(ds.samples.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(ds.samples[i].id == samples[i].id);
    CHECK(ds.samples[i].image == samples[i].image);
    CHECK(ds.samples[i].label == samples[i].label);
    CHECK(ds.samples[i].fov == samples[i].fov);
  }
  CHECK(ds.strata == strata);
  CHECK(list_ids(dir.path() / "images", ".ppm") == std::vector<std::string>{"synth_000", "synth_001", "synth_002"});

  std::filesystem::remove(dir.path() / "fov" / "synth_001.pgm");
  try {
    load_dataset(dir.path());
    FAIL("expected LayoutError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LayoutError);
    CHECK(std::string(e.what()).find("synth_001") != std::string::npos);
  }

  TempDir empty;
  std::filesystem::create_directories(empty.path() / "images");
  try {
    load_dataset(empty.path());
    FAIL("expected EmptyDataset");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDataset);
  }
}

TEST_CASE("strata file parsing") {
  TempDir dir;
  std::ofstream(dir.path() / "s.txt") << "# id\tstratum\nim01\tnormal\n\nim02\tpathological\n";
  const auto s = read_strata(dir.path() / "s.txt");
  CHECK(s.size() == 2);
  CHECK(s.at("im01") == "normal");
  CHECK(s.at("im02") == "pathological");
  std::ofstream(dir.path() / "bad.txt") << "im01 normal\n";
  CHECK_THROWS_AS(read_strata(dir.path() / "bad.txt"), Error);
}
