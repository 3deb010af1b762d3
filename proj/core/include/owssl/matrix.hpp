#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace owssl {

/// Dense row-major matrix of doubles. The only matrix type in the engine;
/// sizes are desk-scale, so everything is plain loops over contiguous storage.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;
  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  void fill(double v) { data_.assign(data_.size(), v); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a (m x k) * b (k x n) -> m x n
Matrix matmul(const Matrix& a, const Matrix& b);
/// a (m x k) * b^T (n x k) -> m x n
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// a^T (m x k, used as k x m) * b (m x n) -> k x n
Matrix matmul_tn(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

std::vector<double> column_sums(const Matrix& a);
std::vector<double> row_sums(const Matrix& a);

}  // namespace owssl
