#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace aqtriad::nn {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

/// y += A x for a row-major rows x cols block at `a`.
inline void gemv_acc(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] += dot(a + r * cols, x, cols);
}

/// y += A^T x.
inline void gemv_t_acc(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    const double* ar = a + r * cols;
    for (std::size_t c = 0; c < cols; ++c) y[c] += ar[c] * xr;
  }
}

/// A += u v^T.
inline void outer_acc(double* a, std::size_t rows, std::size_t cols, const double* u, const double* v) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double ur = u[r];
    if (ur == 0.0) continue;
    double* ar = a + r * cols;
    for (std::size_t c = 0; c < cols; ++c) ar[c] += ur * v[c];
  }
}

}  // namespace aqtriad::nn
