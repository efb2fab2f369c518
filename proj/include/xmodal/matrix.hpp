#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "xmodal/errors.hpp"

namespace xmodal {

// Dense row-major matrix of doubles. Vectors are 1xN or Nx1 matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  static Matrix filled(std::size_t rows, std::size_t cols, double v) {
    Matrix m(rows, cols);
    for (auto& x : m.data_) x = v;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// a(m,k) * b(k,n). Throws ShapeError naming both shapes on a mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

// Each row divided by max(||row||_2, eps); rows with norm below eps are
// scaled by 1/eps, which keeps the zero row at zero.
Matrix l2_normalize_rows(const Matrix& m, double eps = 1e-8);

double row_norm(const Matrix& m, std::size_t r);
double row_dot(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j);

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> ids);

// Columns of a followed by columns of b, row-aligned.
Matrix hconcat(const Matrix& a, const Matrix& b);

std::string shape_str(const Matrix& m);

}  // namespace xmodal
