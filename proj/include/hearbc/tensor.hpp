#pragma once

#include <cassert>
#include <cstdint>
#include <numeric>
#include <vector>

namespace hearbc::nn {

/// Dense row-major tensor. Shape is dynamic (rank 1-4 in practice); storage
/// is a flat vector so kernels work on raw pointers.
template <typename T>
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<T> v;

  Tensor() = default;
  explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)) {
    v.assign(static_cast<size_t>(numel_of(shape)), T(0));
  }

  static int64_t numel_of(const std::vector<int64_t>& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
  }

  int64_t numel() const { return static_cast<int64_t>(v.size()); }
  int64_t size(size_t d) const { return shape[d]; }
  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  T& at(int64_t i) { return v[static_cast<size_t>(i)]; }
  const T& at(int64_t i) const { return v[static_cast<size_t>(i)]; }
  T& at(int64_t i, int64_t j) { return v[static_cast<size_t>(i * shape[1] + j)]; }
  const T& at(int64_t i, int64_t j) const { return v[static_cast<size_t>(i * shape[1] + j)]; }
  T& at(int64_t i, int64_t j, int64_t k) {
    return v[static_cast<size_t>((i * shape[1] + j) * shape[2] + k)];
  }
  const T& at(int64_t i, int64_t j, int64_t k) const {
    return v[static_cast<size_t>((i * shape[1] + j) * shape[2] + k)];
  }

  void zero() { std::fill(v.begin(), v.end(), T(0)); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

template <typename T>
Tensor<T> zeros(std::vector<int64_t> shape) {
  return Tensor<T>(std::move(shape));
}

}  // namespace hearbc::nn
