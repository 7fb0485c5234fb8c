#include "vseg/nn/optim.hpp"

#include <cmath>

#include "vseg/error.hpp"

namespace vseg::nn {

template <typename T>
AdamState<T> make_adam(const std::vector<Parameter<T>>& params, double lr) {
  AdamState<T> s;
  s.lr = lr;
  for (const auto& p : params) {
    if (!p.trainable) continue;
    s.m.emplace_back(p.value.shape());
    s.v.emplace_back(p.value.shape());
  }
  return s;
}

template <typename T>
void adam_step(std::vector<Parameter<T>>& params, AdamState<T>& state) {
  std::size_t k = 0;
  for (const auto& p : params) {
    if (!p.trainable) continue;
    if (k >= state.m.size() || state.m[k].shape() != p.value.shape() || state.v[k].shape() != p.value.shape() ||
        p.grad.shape() != p.value.shape())
      throw Error(ErrorCode::ShapeMismatch, "Adam state does not match parameter " + p.name);
    ++k;
  }
  if (k != state.m.size()) throw Error(ErrorCode::ShapeMismatch, "Adam state has extra moments");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  k = 0;
  for (auto& p : params) {
    if (!p.trainable) continue;
    auto& m = state.m[k];
    auto& v = state.v[k];
    ++k;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      const double mi = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      const double vi = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double update = state.lr * (mi / c1) / (std::sqrt(vi / c2) + state.epsilon);
      p.value[i] = static_cast<T>(p.value[i] - update);
    }
    check_finite(p.value, p.name + " (Adam update)");
  }
}

template AdamState<float> make_adam(const std::vector<Parameter<float>>&, double);
template AdamState<double> make_adam(const std::vector<Parameter<double>>&, double);
template void adam_step(std::vector<Parameter<float>>&, AdamState<float>&);
template void adam_step(std::vector<Parameter<double>>&, AdamState<double>&);

}  // namespace vseg::nn
