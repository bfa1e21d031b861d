#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace autoasm::nn {

/// Dense row-major array of doubles.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, double fill = 0.0)
      : shape(std::move(s)), data(count(shape), fill) {}

  static std::size_t count(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
  }

  std::size_t size() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  double* row(std::size_t r) { return data.data() + r * cols(); }
  const double* row(std::size_t r) const { return data.data() + r * cols(); }

  void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

// y = W x (+ b when given). W is rows x cols.
inline void matvec(const Tensor& w, const double* x, const double* b, double* y) {
  const std::size_t rows = w.rows(), cols = w.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w.row(r);
    double acc = b ? b[r] : 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

// dx += W^T dy
inline void matvec_t_acc(const Tensor& w, const double* dy, double* dx) {
  const std::size_t rows = w.rows(), cols = w.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    const double g = dy[r];
    if (g == 0.0) continue;
    const double* wr = w.row(r);
    for (std::size_t c = 0; c < cols; ++c) dx[c] += wr[c] * g;
  }
}

// dW += dy x^T
inline void outer_acc(Tensor& dw, const double* dy, const double* x) {
  const std::size_t rows = dw.rows(), cols = dw.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    const double g = dy[r];
    if (g == 0.0) continue;
    double* dr = dw.row(r);
    for (std::size_t c = 0; c < cols; ++c) dr[c] += g * x[c];
  }
}

}  // namespace autoasm::nn
