#pragma once

#include <cstddef>
#include <vector>

namespace fewgen {

/// Dense row-major matrix of doubles.  Row count of 1 doubles as a row vector.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Matrix row_vector(const std::vector<double>& v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;

  /// Copy one row out as a plain vector.
  std::vector<double> row(std::size_t r) const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

/// a (m x k) * b (k x n) -> m x n
Matrix matmul(const Matrix& a, const Matrix& b);
/// a (m x k) * b^T with b (n x k) -> m x n
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// a^T with a (k x m), times b (k x n) -> m x n
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// Throws ShapeError when `a` is not r x c.
void require_shape(const Matrix& a, std::size_t r, std::size_t c, const char* what);
/// Throws ShapeError when the two shapes differ.
void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

}  // namespace fewgen
