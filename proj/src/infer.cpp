#include "vseg/infer.hpp"

#include <cmath>

#include "vseg/error.hpp"
#include "vseg/patches.hpp"
#include "vseg/train.hpp"

namespace vseg::infer {

const char* mode_name(Mode mode) { return mode == Mode::stride ? "stride" : "nonoverlap"; }

Mode parse_mode(std::string_view s) {
  if (s == "stride") return Mode::stride;
  if (s == "nonoverlap") return Mode::nonoverlap;
  throw Error(ErrorCode::InvalidValue, "unknown inference mode '" + std::string(s) + "' (expected stride or nonoverlap)");
}

void validate(const InferConfig& cfg) {
  if (cfg.patch_size < 1) throw Error(ErrorCode::InvalidValue, "infer.patch_size must be >= 1");
  if (cfg.mode == Mode::stride && (cfg.stride < 1 || cfg.stride > cfg.patch_size))
    throw Error(ErrorCode::StrideExceedsPatch, "infer.stride must lie in [1, " + std::to_string(cfg.patch_size) + "]");
  if (cfg.batch_size < 1) throw Error(ErrorCode::InvalidValue, "infer.batch_size must be >= 1");
  if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0))
    throw Error(ErrorCode::InvalidValue, "infer.threshold must lie in (0,1)");
}

int effective_stride(const InferConfig& cfg) { return cfg.mode == Mode::nonoverlap ? cfg.patch_size : cfg.stride; }

ProbMap predict_image(const PatchPredictor& predictor, const GrayImage& img, const InferConfig& cfg) {
  validate(cfg);
  const auto [padded, grid] = patches::pad_for_grid(img, cfg.patch_size, effective_stride(cfg));
  const auto tiles = patches::grid_patches(padded, grid);
  const std::size_t s = static_cast<std::size_t>(cfg.patch_size), area = s * s;
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);

  std::vector<patches::PatchPrediction> preds;
  preds.reserve(tiles.size());
  for (std::size_t start = 0; start < tiles.size(); start += batch) {
    const std::size_t len = std::min(batch, tiles.size() - start);
    nn::Tensor<float> x({len, 1, s, s});
    for (std::size_t i = 0; i < len; ++i)
      std::copy(tiles[start + i].data.begin(), tiles[start + i].data.end(), x.data() + i * area);
    const auto probs = predictor(x);
    if (probs.size() != len * area)
      throw Error(ErrorCode::ShapeMismatch, "predictor returned " + std::to_string(probs.size()) + " values for " +
                                                std::to_string(len) + " patches");
    for (std::size_t i = 0; i < len; ++i)
      preds.push_back({tiles[start + i].origin, std::vector<float>(probs.begin() + static_cast<std::ptrdiff_t>(i * area),
                                                                   probs.begin() + static_cast<std::ptrdiff_t>((i + 1) * area))});
  }
  return patches::stitch_average(preds, grid, img.height, img.width);
}

ProbMap predict_image(const nn::Model<float>& model, const GrayImage& img, const InferConfig& cfg) {
  train::tune_allocator();
  const std::size_t chunk = static_cast<std::size_t>(std::max(1, cfg.batch_size));
  return predict_image([&](const nn::Tensor<float>& x) { return nn::softmax_channel(model.predict(x, chunk), 1); },
                       img, cfg);
}

BinaryMask binarize(const ProbMap& p, double threshold) {
  BinaryMask m(p.width, p.height);
  for (std::size_t i = 0; i < p.data.size(); ++i) m.data[i] = p.data[i] >= threshold ? 1 : 0;
  return m;
}

}  // namespace vseg::infer
