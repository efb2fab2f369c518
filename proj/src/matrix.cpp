#include "xmodal/matrix.hpp"

#include <cmath>
#include <string>

namespace xmodal {

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: incompatible shapes " + shape_str(a) + " * " +
                     shape_str(b));
  Matrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* crow = c.data() + i * n;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

double row_norm(const Matrix& m, std::size_t r) {
  double s = 0.0;
  for (double v : m.row(r)) s += v * v;
  return std::sqrt(s);
}

double row_dot(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
  if (a.cols() != b.cols())
    throw ShapeError("row_dot: width mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
  double s = 0.0;
  const double* pa = a.data() + i * a.cols();
  const double* pb = b.data() + j * b.cols();
  for (std::size_t k = 0; k < a.cols(); ++k) s += pa[k] * pb[k];
  return s;
}

Matrix l2_normalize_rows(const Matrix& m, double eps) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double norm = row_norm(m, i);
    double inv = 1.0 / std::max(norm, eps);
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j) * inv;
  }
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> ids) {
  Matrix out(ids.size(), m.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= m.rows())
      throw ValidationError("gather_rows: id " + std::to_string(ids[i]) +
                            " out of range for " + shape_str(m));
    auto src = m.row(ids[i]);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) dst[j] = src[j];
  }
  return out;
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows())
    throw ShapeError("hconcat: row mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
    for (std::size_t j = 0; j < b.cols(); ++j) out(i, a.cols() + j) = b(i, j);
  }
  return out;
}

}  // namespace xmodal
