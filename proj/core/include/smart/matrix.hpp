#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace smart {

/// Dense row-major matrix of doubles. Batches keep one sample per row.
class Matrix2D {
 public:
  Matrix2D() = default;
  Matrix2D(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix2D(std::size_t rows, std::size_t cols, std::vector<double> values);
  Matrix2D(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix2D identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  void fill(double value);
  bool all_finite() const noexcept;

  /// "rows x cols", used in error messages.
  std::string shape_string() const;

  friend bool operator==(const Matrix2D&, const Matrix2D&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a (n x k) times b (k x m).
Matrix2D matmul(const Matrix2D& a, const Matrix2D& b);
/// a (n x k) times b^T, b is (m x k).
Matrix2D matmul_abt(const Matrix2D& a, const Matrix2D& b);
/// a^T times b, a is (k x n), b is (k x m). Result is added into out when accumulate is set.
void matmul_atb(const Matrix2D& a, const Matrix2D& b, Matrix2D& out, bool accumulate);

/// Frobenius inner product.
double dot(const Matrix2D& a, const Matrix2D& b);

/// Throws std::invalid_argument naming both shapes unless a and b agree.
void require_same_shape(const Matrix2D& a, const Matrix2D& b, const char* what);

}  // namespace smart
