// base/tensor.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "base/tensor.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "base/error.h"

namespace csfnet {

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    CSF_CHECK_INPUT(d >= 0, "negative dimension in shape ", ShapeString(shape));
    n *= d;
  }
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(NumElements(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  CSF_CHECK_INPUT(NumElements(shape_) == static_cast<int64_t>(data_.size()),
                  "tensor data size ", data_.size(), " does not match shape ",
                  ShapeString(shape_));
}

int64_t Tensor::dim(int i) const {
  if (i < 0) i += ndim();
  CSF_CHECK_INPUT(i >= 0 && i < ndim(), "dim ", i, " out of range for ",
                  ShapeString(shape_));
  return shape_[i];
}

int64_t Tensor::Offset(std::initializer_list<int64_t> index) const {
  CSF_CHECK_INPUT(static_cast<int>(index.size()) == ndim(),
                  "index rank mismatch for ", ShapeString(shape_));
  int64_t off = 0;
  int k = 0;
  for (int64_t i : index) {
    CSF_CHECK_INPUT(i >= 0 && i < shape_[k], "index out of range");
    off = off * shape_[k] + i;
    ++k;
  }
  return off;
}

double& Tensor::at(std::initializer_list<int64_t> index) {
  return data_[Offset(index)];
}

double Tensor::at(std::initializer_list<int64_t> index) const {
  return data_[Offset(index)];
}

Tensor Tensor::Reshaped(Shape shape) const& {
  Tensor t = *this;
  return std::move(t).Reshaped(std::move(shape));
}

Tensor Tensor::Reshaped(Shape shape) && {
  CSF_CHECK_INPUT(NumElements(shape) == numel(), "cannot reshape ",
                  ShapeString(shape_), " to ", ShapeString(shape));
  shape_ = std::move(shape);
  return std::move(*this);
}

void Tensor::Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::AddInPlace(const Tensor& other, double scale) {
  CSF_CHECK_INPUT(other.numel() == numel(), "AddInPlace size mismatch ",
                  ShapeString(shape_), " vs ", ShapeString(other.shape_));
  const double* src = other.data();
  double* dst = data();
  const int64_t n = numel();
  if (scale == 1.0) {
    for (int64_t i = 0; i < n; ++i) dst[i] += src[i];
  } else {
    for (int64_t i = 0; i < n; ++i) dst[i] += scale * src[i];
  }
}

void Tensor::Scale(double s) {
  for (double& v : data_) v *= s;
}

double Tensor::Sum() const {
  return std::accumulate(data_.begin(), data_.end(), 0.0);
}

double Tensor::MaxAbs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

bool SameShape(const Tensor& a, const Tensor& b) { return a.shape() == b.shape(); }

}  // namespace csfnet
