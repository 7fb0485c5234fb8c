#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "vseg/image_io.hpp"

namespace vseg::prep {

/// Pooled intensity statistics of a gray-scale image set, plus the z-score
/// extrema used for the [0,1] rescale.
struct DatasetStats {
  double mean = 0.0;
  double std = 1.0;
  double zmin = 0.0;
  double zmax = 1.0;
};

struct ClaheParams {
  int tiles_x = 8;
  int tiles_y = 8;
  double clip_limit = 2.0;  // multiple of the mean bin height; 0 disables clipping
  int bins = 256;
};

struct PreprocessParams {
  ClaheParams clahe;
  double gamma = 1.2;
};

GrayImage rgb_to_gray(const RgbImage& img);

/// Mean and population std over all pixels of all images. Only mean/std are set.
DatasetStats compute_stats(std::span<const GrayImage> images);

/// Smallest and largest z-score over the set under `stats`.
std::pair<double, double> z_range(std::span<const GrayImage> images, const DatasetStats& stats);

/// Z-score then min-max rescale with dataset-wide extrema. Values of images
/// outside the fitting set are clamped into [0,1].
GrayImage standardize(const GrayImage& img, const DatasetStats& stats, double global_min, double global_max);

/// Per-tile clip-limited equalization mapping for 8-bit levels. Exposed for
/// inspection and tests.
std::array<int, 256> tile_mapping(std::span<const int> histogram, double clip_limit);

GrayImage clahe(const GrayImage& img, const ClaheParams& params);

GrayImage gamma_adjust(const GrayImage& img, double gamma);

struct PipelineResult {
  std::vector<GrayImage> images;
  DatasetStats stats;
};

/// Fits stats on `images` and runs the whole chain:
/// gray -> standardize -> CLAHE -> gamma.
PipelineResult preprocess_pipeline(std::span<const RgbImage> images, const PreprocessParams& params);

/// Runs the chain on one image with previously fitted stats.
GrayImage apply_pipeline(const RgbImage& img, const DatasetStats& stats, const PreprocessParams& params);

void validate(const ClaheParams& params);

void write_stats(const DatasetStats& stats, const std::filesystem::path& path);
DatasetStats read_stats(const std::filesystem::path& path);

}  // namespace vseg::prep
