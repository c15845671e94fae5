#include "smart/matrix.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smart {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Matrix2D& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

MutMap view(Matrix2D& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

}  // namespace

Matrix2D::Matrix2D(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix2D::Matrix2D(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows_ * cols_) {
    throw std::invalid_argument("Matrix2D: " + std::to_string(data_.size()) +
                                " values do not fill a " + shape_string() + " matrix");
  }
}

Matrix2D::Matrix2D(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("Matrix2D: ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix2D Matrix2D::identity(std::size_t n) {
  Matrix2D m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix2D::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Matrix2D::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix2D::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void require_same_shape(const Matrix2D& a, const Matrix2D& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_string() +
                                " vs " + b.shape_string());
  }
}

Matrix2D matmul(const Matrix2D& a, const Matrix2D& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: " + a.shape_string() + " * " + b.shape_string());
  }
  Matrix2D out(a.rows(), b.cols());
  view(out).noalias() = view(a) * view(b);
  return out;
}

Matrix2D matmul_abt(const Matrix2D& a, const Matrix2D& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul_abt: " + a.shape_string() + " * (" + b.shape_string() +
                                ")^T");
  }
  Matrix2D out(a.rows(), b.rows());
  view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

void matmul_atb(const Matrix2D& a, const Matrix2D& b, Matrix2D& out, bool accumulate) {
  if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols()) {
    throw std::invalid_argument("matmul_atb: (" + a.shape_string() + ")^T * " + b.shape_string() +
                                " -> " + out.shape_string());
  }
  if (accumulate) {
    view(out).noalias() += view(a).transpose() * view(b);
  } else {
    view(out).noalias() = view(a).transpose() * view(b);
  }
}

double dot(const Matrix2D& a, const Matrix2D& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

}  // namespace smart
