#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace vcprune {

/// Dense row-major matrix. Real is float or double; oracles always run the
/// double instantiation.
template <typename Real>
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<Real> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, Real(0)) {
    if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimension");
  }

  Real &at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  const Real &at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  Real *row_ptr(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const Real *row_ptr(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = Real(1);
    return m;
  }

  bool all_finite() const {
    for (Real v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  template <typename Other>
  Matrix<Other> cast() const {
    Matrix<Other> out(rows, cols);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<Other>(data[i]);
    return out;
  }
};

/// Mask with entries that are additively 0 (attend) or -inf (blocked).
/// Stored as a byte grid; additive(i,j) materializes the sentinel.
struct AdditiveMask {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> blocked;  // 1 = -inf, 0 = additive zero

  AdditiveMask() = default;
  AdditiveMask(int r, int c, bool all_blocked = false)
      : rows(r), cols(c), blocked(static_cast<std::size_t>(r) * c, all_blocked ? 1 : 0) {}

  bool is_blocked(int r, int c) const {
    return blocked[static_cast<std::size_t>(r) * cols + c] != 0;
  }
  void set_blocked(int r, int c, bool b = true) {
    blocked[static_cast<std::size_t>(r) * cols + c] = b ? 1 : 0;
  }
  double additive(int r, int c) const {
    return is_blocked(r, c) ? -std::numeric_limits<double>::infinity() : 0.0;
  }

  // Every query row must keep at least one attendable key.
  void validate() const {
    for (int r = 0; r < rows; ++r) {
      bool any = false;
      for (int c = 0; c < cols && !any; ++c) any = !is_blocked(r, c);
      if (!any)
        throw std::invalid_argument("AdditiveMask: fully masked row " + std::to_string(r));
    }
  }
};

template <typename Real>
Matrix<Real> matmul(const Matrix<Real> &a, const Matrix<Real> &b) {
  if (a.cols != b.rows)
    throw std::invalid_argument("matmul: inner dimensions differ (" + std::to_string(a.cols) +
                                " vs " + std::to_string(b.rows) + ")");
  Matrix<Real> out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const Real *arow = a.row_ptr(i);
    Real *orow = out.row_ptr(i);
    for (int k = 0; k < a.cols; ++k) {
      const Real aik = arow[k];
      if (aik == Real(0)) continue;
      const Real *brow = b.row_ptr(k);
      for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

template <typename Real>
Matrix<Real> transpose(const Matrix<Real> &a) {
  Matrix<Real> out(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

/// Row-wise softmax of scores + mask. Max-subtraction keeps exp() in range
/// for |score| up to ~1e4; blocked positions come out exactly 0 and rows sum
/// to 1 over the unblocked positions.
template <typename Real>
Matrix<Real> masked_softmax(const Matrix<Real> &scores, const AdditiveMask &mask) {
  if (scores.rows != mask.rows || scores.cols != mask.cols)
    throw std::invalid_argument("masked_softmax: scores and mask dimensions differ");
  Matrix<Real> out(scores.rows, scores.cols);
  for (int r = 0; r < scores.rows; ++r) {
    Real row_max = std::numeric_limits<Real>::lowest();
    bool any = false;
    for (int c = 0; c < scores.cols; ++c) {
      if (mask.is_blocked(r, c)) continue;
      any = true;
      row_max = std::max(row_max, scores.at(r, c));
    }
    if (!any)
      throw std::invalid_argument("masked_softmax: fully masked row " + std::to_string(r));
    Real denom = Real(0);
    for (int c = 0; c < scores.cols; ++c) {
      if (mask.is_blocked(r, c)) continue;
      const Real e = std::exp(scores.at(r, c) - row_max);
      out.at(r, c) = e;
      denom += e;
    }
    for (int c = 0; c < scores.cols; ++c) {
      if (!mask.is_blocked(r, c)) out.at(r, c) /= denom;
    }
  }
  return out;
}

/// Smooth ReLU-family activation used throughout the model (x * sigmoid(x)).
template <typename Real>
Real silu(Real x) {
  return x / (Real(1) + std::exp(-x));
}

template <typename Real>
void silu_in_place(Matrix<Real> &m) {
  for (Real &v : m.data) v = silu(v);
}

template <typename Real>
double max_abs_diff(const Matrix<Real> &a, const Matrix<Real> &b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument("max_abs_diff: dimensions differ");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i])));
  return m;
}

}  // namespace vcprune
