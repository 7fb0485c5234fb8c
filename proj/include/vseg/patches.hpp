#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vseg/image_io.hpp"

namespace vseg::patches {

struct Origin {
  int row = 0;
  int col = 0;
  bool operator==(const Origin&) const = default;
};

/// Square crop of a (possibly padded) image. `label` is empty for
/// inference patches.
struct Patch {
  int size = 0;
  std::vector<float> data;
  std::vector<std::uint8_t> label;
  Origin origin;
  bool operator==(const Patch&) const = default;
};

struct GridSpec {
  int stride = 0;
  int patch_size = 0;
  int padded_height = 0;
  int padded_width = 0;
  std::vector<Origin> origins;  // row-major
};

struct PatchPrediction {
  Origin origin;
  std::vector<float> probs;  // patch_size^2, row-major
};

/// `n` patches with origins drawn uniformly with replacement over all
/// positions that keep the patch inside the image.
std::vector<Patch> extract_random_patches(const GrayImage& img, const BinaryMask& label, int n, int size,
                                          std::uint64_t seed);

/// Counter-clockwise quarter turn: out[i][j] = in[j][size-1-i].
Patch rotate90(const Patch& p);

/// Each input followed by its 90, 180 and 270 degree rotations.
std::vector<Patch> rotate_augment(std::span<const Patch> patches);

/// Seeded Fisher-Yates permutation of indices 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed);

std::vector<Patch> shuffle(std::vector<Patch> patches, std::uint64_t seed);

/// Padded extent of one axis for the strided grid.
int padded_extent(int dim, int size, int stride);

GridSpec make_grid(int height, int width, int size, int stride);

/// Zero-pads bottom/right so the strided grid tiles the image exactly.
std::pair<GrayImage, GridSpec> pad_for_grid(const GrayImage& img, int size, int stride);

/// Crops every grid origin out of the padded image.
std::vector<Patch> grid_patches(const GrayImage& padded, const GridSpec& grid);

/// Number of grid patches covering each padded pixel.
std::vector<int> cover_counts(const GridSpec& grid);

/// Mean of all covering predictions per pixel, cropped to the original size.
ProbMap stitch_average(std::span<const PatchPrediction> preds, const GridSpec& grid, int original_height,
                       int original_width);

}  // namespace vseg::patches
