#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace vseg::nn {

/// Dense row-major tensor. Activations are rank 4 (batch, channels, height,
/// width); parameters use whatever rank they need.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, T fill = T(0))
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // NCHW accessors; valid for rank-4 tensors only
  std::size_t n() const { return shape_[0]; }
  std::size_t c() const { return shape_[1]; }
  std::size_t h() const { return shape_[2]; }
  std::size_t w() const { return shape_[3]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  T at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void release() {
    data_.clear();
    data_.shrink_to_fit();
  }

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace vseg::nn
