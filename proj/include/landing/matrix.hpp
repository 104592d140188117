#pragma once

// Dense real matrix, row-major storage (element (i, j) lives at data[i*cols+j]).
// Scalar type is float or double; all numerical contracts in this library are
// stated for double and loosen by 1e6 in float mode.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "landing/kernels.hpp"

namespace landing {

template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("empty matrix");
  }

  static Matrix identity(std::size_t p) {
    Matrix m(p, p);
    for (std::size_t i = 0; i < p; ++i) m(i, i) = T(1);
    return m;
  }

  static Matrix from_data(std::size_t rows, std::size_t cols,
                          std::vector<T> data) {
    if (data.size() != rows * cols)
      throw std::invalid_argument("matrix data size mismatch");
    for (T v : data)
      if (!std::isfinite(v))
        throw std::invalid_argument("matrix entries must be finite");
    Matrix m(rows, cols);
    m.data_ = std::move(data);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool square() const { return rows_ == cols_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  T operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  bool all_finite() const {
    for (T v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  Matrix transposed() const {
    Matrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
    return r;
  }

  Matrix& operator+=(const Matrix& o) {
    check_same_shape(o);
    kern::active<T>().axpy(size(), T(1), o.data(), data());
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same_shape(o);
    kern::active<T>().axpy(size(), T(-1), o.data(), data());
    return *this;
  }
  Matrix& operator*=(T s) {
    for (T& v : data_) v *= s;
    return *this;
  }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> r(rows_, cols_);
    for (std::size_t i = 0; i < size(); ++i) r.data()[i] = U(data_[i]);
    return r;
  }

 private:
  void check_same_shape(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw std::invalid_argument("matrix shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using MatrixD = Matrix<double>;
using MatrixF = Matrix<float>;

// C = A * B
template <typename T>
Matrix<T> multiply(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul shape mismatch");
  Matrix<T> c(a.rows(), b.cols());
  kern::active<T>().matmul_nn(a.rows(), a.cols(), b.cols(), a.data(), b.data(),
                              c.data());
  return c;
}

// C = A * B^T
template <typename T>
Matrix<T> multiply_nt(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul shape mismatch");
  Matrix<T> c(a.rows(), b.rows());
  kern::active<T>().matmul_nt(a.rows(), a.cols(), b.rows(), a.data(), b.data(),
                              c.data());
  return c;
}

// C = A^T * B
template <typename T>
Matrix<T> multiply_tn(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul shape mismatch");
  Matrix<T> c(a.cols(), b.cols());
  kern::active<T>().matmul_tn(a.cols(), a.rows(), b.cols(), a.data(), b.data(),
                              c.data());
  return c;
}

template <typename T>
Matrix<T> operator*(const Matrix<T>& a, const Matrix<T>& b) {
  return multiply(a, b);
}

template <typename T>
Matrix<T> operator+(Matrix<T> a, const Matrix<T>& b) {
  a += b;
  return a;
}

template <typename T>
Matrix<T> operator-(Matrix<T> a, const Matrix<T>& b) {
  a -= b;
  return a;
}

template <typename T>
Matrix<T> operator*(T s, Matrix<T> a) {
  a *= s;
  return a;
}

// a + alpha * b
template <typename T>
Matrix<T> add_scaled(Matrix<T> a, T alpha, const Matrix<T>& b) {
  kern::active<T>().axpy(a.size(), alpha, b.data(), a.data());
  return a;
}

template <typename T>
T frob_dot(const Matrix<T>& a, const Matrix<T>& b) {
  return kern::active<T>().dot(a.size(), a.data(), b.data());
}

template <typename T>
T frob_norm(const Matrix<T>& a) {
  return std::sqrt(kern::active<T>().norm2_sq(a.size(), a.data()));
}

template <typename T>
T frob_norm_sq(const Matrix<T>& a) {
  return kern::active<T>().norm2_sq(a.size(), a.data());
}

template <typename T>
T max_abs(const Matrix<T>& a) {
  T m = T(0);
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i]));
  return m;
}

// Tolerance scale: contracts are stated for double; float mode loosens by 1e6.
template <typename T>
constexpr T tol_factor() {
  return std::is_same_v<T, float> ? T(1e6) : T(1);
}

}  // namespace landing
