#pragma once

#include <cstdint>
#include <vector>

#include "vseg/dataset.hpp"

namespace vseg::synth {

struct SynthConfig {
  int count = 12;
  int size = 128;
  int vessels_min = 3;
  int vessels_max = 5;
  double width_min = 1.0;
  double width_max = 4.0;
  double noise_sigma = 6.0;  // per RGB channel, 8-bit units
  double fov_radius = 0.46;  // fraction of the image size
  std::uint64_t seed = 1;
};

void validate(const SynthConfig& cfg);

/// Image `index` of the set; depends only on (cfg, index).
Sample generate_one(const SynthConfig& cfg, int index);

std::vector<Sample> generate(const SynthConfig& cfg);

}  // namespace vseg::synth
