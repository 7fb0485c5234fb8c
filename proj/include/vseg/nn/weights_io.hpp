#pragma once

// Weights file layout (all integers little-endian):
//   "FCNW" | u32 version = 1 | u32 tensor count
//   per tensor: u16 name length | UTF-8 name | u8 rank | u32 dims[rank] |
//               f32 payload, row-major
//
// The first tensor, "meta.arch", records the architecture as
// [arch, base_channels, depth, branch_pairs, dropout] so a model can be
// rebuilt from the file alone.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vseg/nn/model.hpp"

namespace vseg::nn {

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

std::vector<std::uint8_t> encode_weights(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_weights(const std::vector<std::uint8_t>& bytes);

/// Architecture tensor followed by every parameter, in model order.
std::vector<NamedTensor> model_tensors(const Model<float>& model);

/// The exact bytes save_weights writes.
std::vector<std::uint8_t> encode_model(const Model<float>& model);

void save_weights(const Model<float>& model, const std::filesystem::path& path);

/// Copies every tensor of the file into `model`; names and shapes must
/// match exactly (ShapeMismatch otherwise).
void load_weights_into(Model<float>& model, const std::filesystem::path& path);

/// Rebuilds the architecture recorded in the file and loads it.
Model<float> load_model(const std::filesystem::path& path);

}  // namespace vseg::nn
