#pragma once

#include <cstddef>
#include <vector>

#include "grsnn/errors.hpp"

namespace grsnn {

// Dense row-major matrix of doubles. Deliberately minimal; the simulation
// loops index flat storage directly.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double v = 0.0) : rows(r), cols(c), a(r * c, v) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  double* row(std::size_t i) { return a.data() + i * cols; }
  const double* row(std::size_t i) const { return a.data() + i * cols; }

  std::size_t size() const { return a.size(); }
  void fill(double v) { a.assign(a.size(), v); }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

// Dense rank-3 tensor, row-major over (d0, d1, d2).
struct Ten3 {
  std::size_t d0 = 0, d1 = 0, d2 = 0;
  std::vector<double> a;

  Ten3() = default;
  Ten3(std::size_t a0, std::size_t a1, std::size_t a2, double v = 0.0)
      : d0(a0), d1(a1), d2(a2), a(a0 * a1 * a2, v) {}

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return a[(i * d1 + j) * d2 + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return a[(i * d1 + j) * d2 + k];
  }

  double* slab(std::size_t i) { return a.data() + i * d1 * d2; }
  const double* slab(std::size_t i) const { return a.data() + i * d1 * d2; }

  void fill(double v) { a.assign(a.size(), v); }
};

inline void require_shape(bool ok, const char* what) {
  if (!ok) throw ContractError(what);
}

// y += W * x for an n x n transform; x and y are contiguous rows.
inline void matvec_accum(const Mat& w, const double* x, double* y) {
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double* wr = w.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < w.cols; ++j) acc += wr[j] * x[j];
    y[i] += acc;
  }
}

// y += W^T * x
inline void matvec_t_accum(const Mat& w, const double* x, double* y) {
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* wr = w.row(i);
    for (std::size_t j = 0; j < w.cols; ++j) y[j] += wr[j] * xi;
  }
}

}  // namespace grsnn
