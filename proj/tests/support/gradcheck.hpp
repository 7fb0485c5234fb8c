#pragma once

// Central finite-difference oracle for the nn module. Independent of the
// backward code: it only evaluates forward losses.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "vseg/nn/model.hpp"
#include "vseg/nn/tensor.hpp"

namespace gradcheck {

using vseg::nn::Tensor;

struct Report {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;

  void merge(const Report& o) {
    if (o.max_rel_error > max_rel_error) {
      max_rel_error = o.max_rel_error;
      worst = o.worst;
    }
    checked += o.checked;
  }
};

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

/// Compares `analytic[i]` with central differences of `loss` with respect to
/// `values[i]` on up to `samples` random coordinates (all when fewer).
inline Report check(std::vector<double>& values, const std::vector<double>& analytic,
                    const std::function<double()>& loss, const std::string& label, std::size_t samples = 10,
                    std::uint64_t seed = 1, double h = 1e-5) {
  Report r;
  std::vector<std::size_t> idx(values.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (idx.size() > samples) {
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(samples);
  }
  for (std::size_t i : idx) {
    const double saved = values[i];
    values[i] = saved + h;
    const double up = loss();
    values[i] = saved - h;
    const double down = loss();
    values[i] = saved;
    const double numeric = (up - down) / (2 * h);
    const double err = relative_error(analytic[i], numeric);
    if (err > r.max_rel_error || r.checked == 0) {
      r.max_rel_error = std::max(r.max_rel_error, err);
      if (err >= r.max_rel_error) r.worst = label + "[" + std::to_string(i) + "]";
    }
    ++r.checked;
  }
  return r;
}

inline Report check(Tensor<double>& t, const Tensor<double>& analytic, const std::function<double()>& loss,
                    const std::string& label, std::size_t samples = 10, std::uint64_t seed = 1) {
  return check(t.storage(), analytic.storage(), loss, label, samples, seed);
}

/// Random tensor with entries in [-1,-margin] U [margin,1] so ReLU kinks
/// and pooling ties are not straddled by the perturbation.
inline Tensor<double> random_tensor(std::vector<std::size_t> shape, std::uint64_t seed, double margin = 0.0) {
  Tensor<double> t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(margin, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (auto& v : t.values()) v = sign(rng) ? u(rng) : -u(rng);
  return t;
}

inline double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Checks every trainable parameter (and the input) of a model under the
/// projected loss sum(r * forward(x)). Train mode with a fixed dropout seed.
inline Report check_model(vseg::nn::Model<double>& model, Tensor<double> x, std::uint64_t seed,
                          std::size_t samples = 10) {
  using vseg::nn::Mode;
  vseg::nn::Tape<double> tape;
  const auto& y = model.forward(x, tape, Mode::train, seed);
  const Tensor<double> r = random_tensor(y.shape(), seed + 99);
  model.zero_grad();
  Tensor<double> gx = model.backward(tape, r, true);

  // snapshot running stats: train-mode forwards in the loss closure update them
  std::vector<Tensor<double>> saved;
  for (auto& p : model.parameters()) saved.push_back(p.value);
  auto loss = [&] {
    vseg::nn::Tape<double> t;
    const double v = dot(model.forward(x, t, Mode::train, seed), r);
    for (std::size_t i = 0; i < saved.size(); ++i)
      if (!model.parameters()[i].trainable) model.parameters()[i].value = saved[i];
    return v;
  };

  Report report = check(x, gx, loss, "input", samples, seed);
  std::uint64_t k = 0;
  for (auto& p : model.parameters()) {
    if (!p.trainable) continue;
    report.merge(check(p.value, p.grad, loss, p.name, samples, seed + (++k)));
  }
  return report;
}

}  // namespace gradcheck
