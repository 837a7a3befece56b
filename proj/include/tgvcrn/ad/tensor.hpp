#pragma once

#include <Eigen/Core>

#include <initializer_list>
#include <string>
#include <vector>

namespace tgvcrn::ad {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using ArrMap = Eigen::Map<Eigen::ArrayXd>;
using ConstArrMap = Eigen::Map<const Eigen::ArrayXd>;
// Vectorized reductions split their work at the first aligned element, so an
// unaligned buffer could round differently from run to run.
using Storage = std::vector<double, Eigen::aligned_allocator<double>>;

// Dense row-major matrix of doubles. Vectors are 1xn or nx1; scalars are 1x1.
class Tensor {
 public:
  Tensor() : rows_(1), cols_(1), data_(1, 0.0) {}
  Tensor(int rows, int cols, double fill = 0.0);
  Tensor(int rows, int cols, const std::vector<double>& data);
  Tensor(int rows, int cols, Storage data);

  static Tensor scalar(double v) { return Tensor(1, 1, v); }
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor column(const std::vector<double>& v);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_str() const;

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double& operator[](int i) { return data_[i]; }
  double operator[](int i) const { return data_[i]; }
  double item() const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const Storage& values() const { return data_; }
  Storage& values() { return data_; }

  MatMap mat() { return MatMap(data_.data(), rows_, cols_); }
  ConstMatMap mat() const { return ConstMatMap(data_.data(), rows_, cols_); }
  ArrMap arr() { return ArrMap(data_.data(), size()); }
  ConstArrMap arr() const { return ConstArrMap(data_.data(), size()); }

  bool all_finite() const;
  bool operator==(const Tensor& o) const = default;

 private:
  int rows_;
  int cols_;
  Storage data_;
};

// tanh via one vectorized exp. Exactly odd, tanh(0) = 0, absolute error ~1e-16.
void tanh_into(const double* x, double* out, int n);

}  // namespace tgvcrn::ad
