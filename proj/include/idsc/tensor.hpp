#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "idsc/errors.hpp"

namespace idsc {

std::string shape_str(const std::vector<int>& shape);

// Dense row-major float tensor. Rank and extents are fixed at construction;
// extents must be positive. No broadcasting, no strides, no views.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);  // zero-filled
  Tensor(std::vector<int> shape, std::vector<float> data);

  static Tensor full(std::vector<int> shape, float value);
  static Tensor scalar(float value);  // shape {1}
  static Tensor from2d(std::initializer_list<std::initializer_list<float>> rows);

  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(i); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::vector<float>& vec() { return data_; }
  const std::vector<float>& vec() const { return data_; }

  float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // Row-major element access, bounds unchecked beyond rank.
  float& at2(int i, int j) { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
  float at2(int i, int j) const { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
  float& at3(int c, int y, int x) {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }
  float at3(int c, int y, int x) const {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;

 private:
  std::vector<int> shape_;
  std::vector<float> data_;
};

int64_t shape_numel(const std::vector<int>& shape);

}  // namespace idsc
