#pragma once

#include <functional>
#include <string_view>

#include "vseg/image_io.hpp"
#include "vseg/nn/model.hpp"

namespace vseg::infer {

enum class Mode { nonoverlap, stride };

const char* mode_name(Mode mode);
Mode parse_mode(std::string_view s);

struct InferConfig {
  Mode mode = Mode::stride;
  int stride = 5;
  int patch_size = 48;
  int batch_size = 64;
  double threshold = 0.5;
};

void validate(const InferConfig& cfg);

/// Stride actually used: the patch size in non-overlap mode.
int effective_stride(const InferConfig& cfg);

/// Maps a (n, 1, s, s) batch to n*s*s vessel probabilities, row-major per patch.
using PatchPredictor = std::function<std::vector<float>(const nn::Tensor<float>& batch)>;

/// Pads, decomposes into grid patches, predicts in batches and stitches the
/// overlap average back to the image size.
ProbMap predict_image(const PatchPredictor& predictor, const GrayImage& img, const InferConfig& cfg);

/// Vessel probability is softmax channel 1 of the model output.
ProbMap predict_image(const nn::Model<float>& model, const GrayImage& img, const InferConfig& cfg);

/// 1 where p >= threshold.
BinaryMask binarize(const ProbMap& p, double threshold);

}  // namespace vseg::infer
