#pragma once

// Layer primitives with explicit forward and backward passes. Backward
// functions accumulate parameter gradients (+=) and overwrite input
// gradients.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "vseg/nn/tensor.hpp"

namespace vseg::nn {

enum class Mode { train, eval };

/// Throws NumericAbort naming `where` if any element is NaN or infinite.
template <typename T>
void check_finite(const Tensor<T>& t, std::string_view where);

// Convolution, stride 1. k = 3 uses zero padding 1, k = 1 no padding.
// w: (out_c, in_c, k, k), b: (out_c)
template <typename T>
Tensor<T> conv_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

/// grad_x may be null when the input gradient is not needed.
template <typename T>
void conv_backward(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& w, Tensor<T>* grad_x,
                   Tensor<T>& grad_w, Tensor<T>& grad_b);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x);
template <typename T>
Tensor<T> relu_backward(Tensor<T> grad_out, const Tensor<T>& x);

/// Inverted dropout. `mask` receives the per-element multiplier (0 or
/// 1/(1-rate)); in eval mode or with rate 0 the output equals the input.
template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& x, double rate, Mode mode, std::uint64_t seed, Tensor<T>& mask);
template <typename T>
Tensor<T> dropout_backward(Tensor<T> grad_out, const Tensor<T>& mask);

/// 2x2 max pooling, stride 2. `argmax` holds 0..3 per output element, first
/// maximum in row-major window order.
template <typename T>
Tensor<T> maxpool2_forward(const Tensor<T>& x, std::vector<std::uint8_t>& argmax);
template <typename T>
Tensor<T> maxpool2_backward(const Tensor<T>& grad_out, const std::vector<std::uint8_t>& argmax);

/// Nearest-neighbour 2x upsampling.
template <typename T>
Tensor<T> upsample2_forward(const Tensor<T>& x);
template <typename T>
Tensor<T> upsample2_backward(const Tensor<T>& grad_out);

/// Channel-axis concatenation [a, b].
template <typename T>
Tensor<T> concat_forward(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
void concat_backward(const Tensor<T>& grad_out, std::size_t channels_a, Tensor<T>& grad_a, Tensor<T>& grad_b);

template <typename T>
Tensor<T> add_forward(const Tensor<T>& a, const Tensor<T>& b);

struct BatchNormCache {
  std::vector<double> mean;
  std::vector<double> inv_std;
  bool batch_stats = true;  // false when normalized with running stats
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

/// Per-channel normalization. Train mode normalizes with batch statistics
/// and folds them into the running stats (running = 0.9 running + 0.1 batch);
/// eval mode uses the running stats.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                            Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode, BatchNormCache& cache);
template <typename T>
Tensor<T> batchnorm_backward(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& gamma,
                             const BatchNormCache& cache, Tensor<T>& grad_gamma, Tensor<T>& grad_beta);

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;  // d loss / d logits
};

/// Two-class softmax cross-entropy averaged over every pixel. `labels` has
/// one 0/1 entry per (n, h, w).
template <typename T>
LossResult<T> softmax_xent(const Tensor<T>& logits, std::span<const std::uint8_t> labels);

/// Softmax probability of `channel` for a two-channel logit tensor, as
/// (n, h, w) row-major.
template <typename T>
std::vector<float> softmax_channel(const Tensor<T>& logits, std::size_t channel);

}  // namespace vseg::nn
