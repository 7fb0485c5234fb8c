#pragma once

#include <cstdint>
#include <vector>

#include "vseg/nn/model.hpp"

namespace vseg::nn {

template <typename T>
struct AdamState {
  std::uint64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<Tensor<T>> m;  // one per trainable parameter, in order
  std::vector<Tensor<T>> v;
};

/// Moments sized for every trainable parameter of `params`.
template <typename T>
AdamState<T> make_adam(const std::vector<Parameter<T>>& params, double lr = 1e-3);

/// Bias-corrected Adam update of every trainable parameter from its grad.
template <typename T>
void adam_step(std::vector<Parameter<T>>& params, AdamState<T>& state);

}  // namespace vseg::nn
