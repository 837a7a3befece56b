#include "tgvcrn/ad/tensor.hpp"

#include <cmath>

#include "tgvcrn/common/errors.hpp"

namespace tgvcrn::ad {

Tensor::Tensor(int rows, int cols, double fill) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) {
    throw DimensionError("tensor dimensions must be positive, got " + std::to_string(rows) +
                         "x" + std::to_string(cols));
  }
  data_.assign(static_cast<std::size_t>(rows) * cols, fill);
}

Tensor::Tensor(int rows, int cols, const std::vector<double>& data)
    : Tensor(rows, cols, Storage(data.begin(), data.end())) {}

Tensor::Tensor(int rows, int cols, Storage data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows < 1 || cols < 1) throw DimensionError("tensor dimensions must be positive");
  if (data_.size() != static_cast<std::size_t>(rows) * cols) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str());
  }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
  std::vector<double> data;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) throw DimensionError("ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(r, c, std::move(data));
}

Tensor Tensor::column(const std::vector<double>& v) {
  return Tensor(static_cast<int>(v.size()), 1, v);
}

std::string Tensor::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item() on non-scalar tensor " + shape_str());
  return data_[0];
}

bool Tensor::all_finite() const { return arr().isFinite().all(); }

void tanh_into(const double* x, double* out, int n) {
  ConstArrMap in(x, n);
  ArrMap res(out, n);
  const Eigen::ArrayXd e = (-2.0 * in.abs()).exp();
  res = ((1.0 - e) / (1.0 + e)) * in.sign();
}

}  // namespace tgvcrn::ad
