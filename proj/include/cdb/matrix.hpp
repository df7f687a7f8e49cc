#pragma once

#include <cstddef>
#include <vector>

namespace cdb {

// Dense row-major matrix of doubles. Deliberately minimal: the models here
// are small enough that explicit loops beat a BLAS dependency, and fixed
// summation order keeps runs deterministic.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }

  void fill(double v) { data.assign(rows * cols, v); }

  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
  }
};

}  // namespace cdb
