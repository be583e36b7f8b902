// base/tensor.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_BASE_TENSOR_H_
#define CSFNET_BASE_TENSOR_H_

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace csfnet {

using Shape = std::vector<int64_t>;

int64_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Dense row-major float64 tensor with value semantics.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor Scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }

  const Shape& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const;
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](int64_t i) { return data_[i]; }
  double operator[](int64_t i) const { return data_[i]; }
  double& at(std::initializer_list<int64_t> index);
  double at(std::initializer_list<int64_t> index) const;

  // Same data, new shape; element count must match.
  Tensor Reshaped(Shape shape) const&;
  Tensor Reshaped(Shape shape) &&;

  void Fill(double v);
  void AddInPlace(const Tensor& other, double scale = 1.0);
  void Scale(double s);

  double Sum() const;
  double MaxAbs() const;
  bool AllFinite() const;

 private:
  int64_t Offset(std::initializer_list<int64_t> index) const;

  Shape shape_;
  std::vector<double> data_;
};

bool SameShape(const Tensor& a, const Tensor& b);

}  // namespace csfnet

#endif  // CSFNET_BASE_TENSOR_H_
