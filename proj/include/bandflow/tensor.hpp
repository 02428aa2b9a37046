/**
 * Copyright 2026 The bandflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef BANDFLOW_TENSOR_HPP_
#define BANDFLOW_TENSOR_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace bandflow {

class Rng;

/// Dense row-major tensor of doubles, rank 1..4. Activations use a
/// channels-last [rows, cols, channels] convention throughout the model code.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, double fill);

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  double& at(int i, int j) { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
  double at(int i, int j) const { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
  double& at(int i, int j, int k) {
    return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  double at(int i, int j, int k) const {
    return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }

  void fill(double v);
  void add_(const Tensor& other);            // elementwise +=
  void scale_(double s);                     // elementwise *=
  Tensor reshaped(std::vector<int> shape) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool is_finite() const;
  std::string shape_str() const;

  static Tensor randn(std::vector<int> shape, Rng& rng, double stddev = 1.0);

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

/// Throws std::invalid_argument unless a and b have identical shapes.
void check_same_shape(const Tensor& a, const Tensor& b, const char* where);

}  // namespace bandflow

#endif  // BANDFLOW_TENSOR_HPP_
