#include "mbc/matrix.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "mbc/errors.hpp"

namespace mbc {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> d)
    : rows(r), cols(c), data(std::move(d)) {
  if (data.size() != rows * cols) {
    throw ConfigError("Matrix: data length " + std::to_string(data.size()) +
                      " does not match " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix Matrix::scalar(double v) {
  Matrix m(1, 1);
  m.data[0] = v;
  return m;
}

Matrix Matrix::row(std::vector<double> v) {
  const std::size_t n = v.size();
  return Matrix(1, n, std::move(v));
}

Matrix Matrix::column(std::vector<double> v) {
  const std::size_t n = v.size();
  return Matrix(n, 1, std::move(v));
}

std::string Matrix::shape_str() const {
  std::ostringstream os;
  os << rows << "x" << cols;
  return os.str();
}

bool Matrix::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double Matrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : data) s += v * v;
  return std::sqrt(s);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw ConfigError("matmul: shape mismatch " + a.shape_str() + " * " +
                      b.shape_str());
  }
  Matrix c(a.rows, b.cols);
  // ikj order keeps the inner loop contiguous in both b and c.
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[i * a.cols];
    double* crow = &c.data[i * c.cols];
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = &b.data[k * b.cols];
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) {
    throw ConfigError("matmul_nt: shape mismatch " + a.shape_str() + " * " +
                      b.shape_str() + "^T");
  }
  Matrix c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[i * a.cols];
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = &b.data[j * b.cols];
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
      c.at(i, j) = s;
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) {
    throw ConfigError("matmul_tn: shape mismatch " + a.shape_str() + "^T * " +
                      b.shape_str());
  }
  Matrix c(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double* arow = &a.data[k * a.cols];
    const double* brow = &b.data[k * b.cols];
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = &c.data[i * c.cols];
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

void add_inplace(Matrix& dst, const Matrix& src) {
  if (!dst.same_shape(src)) {
    throw ConfigError("add_inplace: shape mismatch " + dst.shape_str() +
                      " += " + src.shape_str());
  }
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

void axpy_inplace(Matrix& dst, double alpha, const Matrix& src) {
  if (!dst.same_shape(src)) {
    throw ConfigError("axpy_inplace: shape mismatch");
  }
  for (std::size_t i = 0; i < dst.data.size(); ++i)
    dst.data[i] += alpha * src.data[i];
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols,
                   const char* where) {
  if (m.rows != rows || m.cols != cols) {
    throw ConfigError(std::string(where) + ": expected " +
                      std::to_string(rows) + "x" + std::to_string(cols) +
                      ", got " + m.shape_str());
  }
}

}  // namespace mbc
