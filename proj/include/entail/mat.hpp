#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>
#include <vector>

#include "entail/errors.hpp"

namespace entail {

inline std::string shape_str(int rows, int cols) {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

// Dense row-major matrix. Plain storage; differentiation lives in tape.hpp.
template <typename T>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, T(0)) {
    if (r < 0 || c < 0) throw DimensionError("Mat: negative shape " + shape_str(r, c));
  }
  Mat(int r, int c, std::initializer_list<T> vals) : Mat(r, c) {
    if (vals.size() != data.size())
      throw DimensionError("Mat: initializer size " + std::to_string(vals.size()) +
                           " does not match shape " + shape_str(r, c));
    std::copy(vals.begin(), vals.end(), data.begin());
  }

  static Mat filled(int r, int c, T v) {
    Mat m(r, c);
    std::fill(m.data.begin(), m.data.end(), v);
    return m;
  }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  static Mat column(std::initializer_list<T> vals) {
    Mat m(static_cast<int>(vals.size()), 1);
    std::copy(vals.begin(), vals.end(), m.data.begin());
    return m;
  }

  T& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  T operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  size_t size() const { return data.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
  std::string shape() const { return shape_str(rows, cols); }

  bool all_finite() const {
    for (T v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  template <typename U>
  Mat<U> cast() const {
    Mat<U> out(rows, cols);
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

template <typename T>
void add_into(Mat<T>& dst, const Mat<T>& src) {
  if (!dst.same_shape(src))
    throw DimensionError("add_into: shape mismatch " + dst.shape() + " vs " + src.shape());
  for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

// C = A * B
template <typename T>
Mat<T> mat_mul(const Mat<T>& a, const Mat<T>& b) {
  if (a.cols != b.rows)
    throw DimensionError("mat_mul: inner dimensions disagree: " + a.shape() + " * " + b.shape());
  Mat<T> c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const T* arow = a.data.data() + static_cast<size_t>(i) * a.cols;
    T* crow = c.data.data() + static_cast<size_t>(i) * b.cols;
    for (int k = 0; k < a.cols; ++k) {
      const T aik = arow[k];
      if (aik == T(0)) continue;
      const T* brow = b.data.data() + static_cast<size_t>(k) * b.cols;
      for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

// C = A * B^T
template <typename T>
Mat<T> mat_mul_nt(const Mat<T>& a, const Mat<T>& b) {
  if (a.cols != b.cols)
    throw DimensionError("mat_mul_nt: inner dimensions disagree: " + a.shape() + " * " +
                         shape_str(b.cols, b.rows));
  Mat<T> c(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const T* arow = a.data.data() + static_cast<size_t>(i) * a.cols;
    for (int j = 0; j < b.rows; ++j) {
      const T* brow = b.data.data() + static_cast<size_t>(j) * b.cols;
      T acc = T(0);
      for (int k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
      c(i, j) = acc;
    }
  }
  return c;
}

// C = A^T * B
template <typename T>
Mat<T> mat_mul_tn(const Mat<T>& a, const Mat<T>& b) {
  if (a.rows != b.rows)
    throw DimensionError("mat_mul_tn: inner dimensions disagree: " + shape_str(a.cols, a.rows) +
                         " * " + b.shape());
  Mat<T> c(a.cols, b.cols);
  for (int k = 0; k < a.rows; ++k) {
    const T* arow = a.data.data() + static_cast<size_t>(k) * a.cols;
    const T* brow = b.data.data() + static_cast<size_t>(k) * b.cols;
    for (int i = 0; i < a.cols; ++i) {
      const T aki = arow[i];
      if (aki == T(0)) continue;
      T* crow = c.data.data() + static_cast<size_t>(i) * c.cols;
      for (int j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

template <typename T>
Mat<T> mat_transpose(const Mat<T>& a) {
  Mat<T> t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

}  // namespace entail
