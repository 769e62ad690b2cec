#ifndef MBC_MATRIX_HPP_
#define MBC_MATRIX_HPP_

#include <cstddef>
#include <string>
#include <vector>

namespace mbc {

// Dense row-major 2-D array of doubles. Batch dimension is rows, feature
// dimension is cols, everywhere.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> d);

  static Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, c); }
  static Matrix identity(std::size_t n);
  static Matrix scalar(double v);
  static Matrix row(std::vector<double> v);
  static Matrix column(std::vector<double> v);

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }
  std::string shape_str() const;

  bool all_finite() const;
  double frobenius_norm() const;
};

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// C = A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

void add_inplace(Matrix& dst, const Matrix& src);
void axpy_inplace(Matrix& dst, double alpha, const Matrix& src);

// Fails with ConfigError when shapes are incompatible; `where` names the call
// site in the message.
void require_shape(const Matrix& m, std::size_t rows, std::size_t cols,
                   const char* where);

}  // namespace mbc

#endif  // MBC_MATRIX_HPP_
