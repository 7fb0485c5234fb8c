#include "vseg/patches.hpp"

#include <random>

#include "vseg/error.hpp"

namespace vseg::patches {

namespace {

Patch crop(const GrayImage& img, const BinaryMask* label, int row, int col, int size) {
  Patch p;
  p.size = size;
  p.origin = {row, col};
  p.data.resize(static_cast<std::size_t>(size) * size);
  if (label) p.label.resize(p.data.size());
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const std::size_t dst = static_cast<std::size_t>(r) * size + c;
      p.data[dst] = static_cast<float>(img.at(row + r, col + c));
      if (label) p.label[dst] = label->at(row + r, col + c);
    }
  }
  return p;
}

}  // namespace

std::vector<Patch> extract_random_patches(const GrayImage& img, const BinaryMask& label, int n, int size,
                                          std::uint64_t seed) {
  if (size < 1) throw Error(ErrorCode::InvalidArgument, "patch size must be >= 1");
  if (img.width < size || img.height < size)
    throw Error(ErrorCode::PatchLargerThanImage, "patch " + std::to_string(size) + " exceeds image " +
                                                     std::to_string(img.width) + "x" + std::to_string(img.height));
  if (label.width != img.width || label.height != img.height)
    throw Error(ErrorCode::DimMismatch, "label dimensions differ from image");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> rows(0, img.height - size);
  std::uniform_int_distribution<int> cols(0, img.width - size);
  std::vector<Patch> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) {
    const int r = rows(rng);
    const int c = cols(rng);
    out.push_back(crop(img, &label, r, c, size));
  }
  return out;
}

Patch rotate90(const Patch& p) {
  Patch out = p;
  const int s = p.size;
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      const std::size_t dst = static_cast<std::size_t>(i) * s + j;
      const std::size_t src = static_cast<std::size_t>(j) * s + (s - 1 - i);
      out.data[dst] = p.data[src];
      if (!p.label.empty()) out.label[dst] = p.label[src];
    }
  }
  return out;
}

std::vector<Patch> rotate_augment(std::span<const Patch> patches) {
  std::vector<Patch> out;
  out.reserve(4 * patches.size());
  for (const auto& p : patches) {
    out.push_back(p);
    for (int k = 1; k < 4; ++k) out.push_back(rotate90(out.back()));
  }
  return out;
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(idx[i - 1], idx[pick(rng)]);
  }
  return idx;
}

std::vector<Patch> shuffle(std::vector<Patch> patches, std::uint64_t seed) {
  const auto idx = permutation(patches.size(), seed);
  std::vector<Patch> out;
  out.reserve(patches.size());
  for (auto i : idx) out.push_back(std::move(patches[i]));
  return out;
}

int padded_extent(int dim, int size, int stride) {
  if (dim <= size) return size;
  return size + stride * ((dim - size + stride - 1) / stride);
}

GridSpec make_grid(int height, int width, int size, int stride) {
  if (stride < 1 || size < 1) throw Error(ErrorCode::InvalidArgument, "stride and patch size must be >= 1");
  if (stride > size)
    throw Error(ErrorCode::StrideExceedsPatch,
                "stride " + std::to_string(stride) + " > patch size " + std::to_string(size));
  GridSpec g;
  g.stride = stride;
  g.patch_size = size;
  g.padded_height = padded_extent(height, size, stride);
  g.padded_width = padded_extent(width, size, stride);
  for (int r = 0; r + size <= g.padded_height; r += stride)
    for (int c = 0; c + size <= g.padded_width; c += stride) g.origins.push_back({r, c});
  return g;
}

std::pair<GrayImage, GridSpec> pad_for_grid(const GrayImage& img, int size, int stride) {
  GridSpec g = make_grid(img.height, img.width, size, stride);
  GrayImage padded(g.padded_width, g.padded_height, 0.0);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) padded.at(r, c) = img.at(r, c);
  return {std::move(padded), std::move(g)};
}

std::vector<Patch> grid_patches(const GrayImage& padded, const GridSpec& grid) {
  if (padded.height != grid.padded_height || padded.width != grid.padded_width)
    throw Error(ErrorCode::DimMismatch, "image does not match grid");
  std::vector<Patch> out;
  out.reserve(grid.origins.size());
  for (const auto& o : grid.origins) out.push_back(crop(padded, nullptr, o.row, o.col, grid.patch_size));
  return out;
}

std::vector<int> cover_counts(const GridSpec& grid) {
  std::vector<int> count(static_cast<std::size_t>(grid.padded_height) * grid.padded_width, 0);
  for (const auto& o : grid.origins)
    for (int r = 0; r < grid.patch_size; ++r)
      for (int c = 0; c < grid.patch_size; ++c)
        ++count[static_cast<std::size_t>(o.row + r) * grid.padded_width + o.col + c];
  return count;
}

ProbMap stitch_average(std::span<const PatchPrediction> preds, const GridSpec& grid, int original_height,
                       int original_width) {
  if (original_height > grid.padded_height || original_width > grid.padded_width)
    throw Error(ErrorCode::DimMismatch, "original dims exceed padded grid");
  const int s = grid.patch_size;
  const int per_row = (grid.padded_width - s) / grid.stride + 1;
  std::vector<const PatchPrediction*> slot(grid.origins.size(), nullptr);
  for (const auto& p : preds) {
    const auto& o = p.origin;
    if (o.row % grid.stride != 0 || o.col % grid.stride != 0 || o.row + s > grid.padded_height ||
        o.col + s > grid.padded_width)
      throw Error(ErrorCode::MissingPrediction, "prediction at an origin outside the grid");
    if (p.probs.size() != static_cast<std::size_t>(s) * s)
      throw Error(ErrorCode::ShapeMismatch, "prediction size differs from patch size");
    slot[static_cast<std::size_t>(o.row / grid.stride) * per_row + o.col / grid.stride] = &p;
  }

  // double sums of float inputs are exact for realistic cover counts, so
  // identical predictions average back to themselves bit-for-bit
  std::vector<double> sum(static_cast<std::size_t>(grid.padded_height) * grid.padded_width, 0.0);
  std::vector<int> count(sum.size(), 0);
  for (std::size_t k = 0; k < grid.origins.size(); ++k) {
    const auto& o = grid.origins[k];
    if (!slot[k])
      throw Error(ErrorCode::MissingPrediction,
                  "no prediction for origin (" + std::to_string(o.row) + "," + std::to_string(o.col) + ")");
    const auto& probs = slot[k]->probs;
    for (int r = 0; r < s; ++r) {
      for (int c = 0; c < s; ++c) {
        const std::size_t dst = static_cast<std::size_t>(o.row + r) * grid.padded_width + o.col + c;
        sum[dst] += probs[static_cast<std::size_t>(r) * s + c];
        ++count[dst];
      }
    }
  }
  ProbMap out(original_width, original_height);
  for (int r = 0; r < original_height; ++r)
    for (int c = 0; c < original_width; ++c) {
      const std::size_t src = static_cast<std::size_t>(r) * grid.padded_width + c;
      out.data[static_cast<std::size_t>(r) * original_width + c] = sum[src] / count[src];
    }
  return out;
}

}  // namespace vseg::patches
