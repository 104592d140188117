#pragma once

// Test-only reference implementations, deliberately different algorithms
// from the library: modified Gram-Schmidt QR, one-sided Jacobi SVD, Taylor
// matrix exponential, and finite differences.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "landing/matrix.hpp"

namespace oracle {

using landing::Matrix;

// Modified Gram-Schmidt thin QR with positive diagonal.
template <typename T>
void mgs_qr(const Matrix<T>& m, Matrix<T>& q, Matrix<T>& r) {
  const std::size_t n = m.rows(), p = m.cols();
  q = m;
  r = Matrix<T>(p, p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      T s = T(0);
      for (std::size_t k = 0; k < n; ++k) s += q(k, i) * q(k, j);
      r(i, j) = s;
      for (std::size_t k = 0; k < n; ++k) q(k, j) -= s * q(k, i);
    }
    T nrm = T(0);
    for (std::size_t k = 0; k < n; ++k) nrm += q(k, j) * q(k, j);
    nrm = std::sqrt(nrm);
    r(j, j) = nrm;
    for (std::size_t k = 0; k < n; ++k) q(k, j) /= nrm;
  }
}

// One-sided Jacobi SVD: returns U (n x p, orthonormal columns), singular
// values, and V (p x p) with M = U diag(s) V^T.
template <typename T>
void jacobi_svd(const Matrix<T>& m, Matrix<T>& u, std::vector<T>& sigma,
                Matrix<T>& v) {
  const std::size_t n = m.rows(), p = m.cols();
  u = m;
  v = Matrix<T>::identity(p);
  for (int sweep = 0; sweep < 60; ++sweep) {
    T off = T(0);
    for (std::size_t i = 0; i + 1 < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j) {
        T aii = T(0), ajj = T(0), aij = T(0);
        for (std::size_t k = 0; k < n; ++k) {
          aii += u(k, i) * u(k, i);
          ajj += u(k, j) * u(k, j);
          aij += u(k, i) * u(k, j);
        }
        off = std::max(off, std::abs(aij) / std::sqrt(aii * ajj));
        if (aij == T(0)) continue;
        const T zeta = (ajj - aii) / (T(2) * aij);
        const T t = (zeta >= T(0) ? T(1) : T(-1)) /
                    (std::abs(zeta) + std::sqrt(T(1) + zeta * zeta));
        const T c = T(1) / std::sqrt(T(1) + t * t);
        const T s = c * t;
        for (std::size_t k = 0; k < n; ++k) {
          const T ui = u(k, i), uj = u(k, j);
          u(k, i) = c * ui - s * uj;
          u(k, j) = s * ui + c * uj;
        }
        for (std::size_t k = 0; k < p; ++k) {
          const T vi = v(k, i), vj = v(k, j);
          v(k, i) = c * vi - s * vj;
          v(k, j) = s * vi + c * vj;
        }
      }
    if (off < T(1e-15) * landing::tol_factor<T>()) break;
  }
  sigma.assign(p, T(0));
  for (std::size_t j = 0; j < p; ++j) {
    T nrm = T(0);
    for (std::size_t k = 0; k < n; ++k) nrm += u(k, j) * u(k, j);
    sigma[j] = std::sqrt(nrm);
    if (sigma[j] > T(0))
      for (std::size_t k = 0; k < n; ++k) u(k, j) /= sigma[j];
  }
}

// Orthogonal polar factor U V^T via the Jacobi SVD.
template <typename T>
Matrix<T> polar_svd(const Matrix<T>& m) {
  Matrix<T> u(1, 1), v(1, 1);
  std::vector<T> sigma;
  jacobi_svd(m, u, sigma, v);
  return landing::multiply_nt(u, v);
}

// Scaling-and-squaring Taylor-series matrix exponential (order 30).
template <typename T>
Matrix<T> expm_taylor(const Matrix<T>& a) {
  const std::size_t p = a.rows();
  int s = 0;
  T nrm = landing::frob_norm(a);
  while (nrm > T(0.25)) {
    nrm /= T(2);
    ++s;
  }
  Matrix<T> as = a;
  as *= static_cast<T>(std::ldexp(1.0, -s));
  Matrix<T> result = Matrix<T>::identity(p);
  Matrix<T> term = Matrix<T>::identity(p);
  for (int k = 1; k <= 30; ++k) {
    term = term * as;
    term *= T(1) / static_cast<T>(k);
    result += term;
  }
  for (int i = 0; i < s; ++i) result = result * result;
  return result;
}

// Central finite-difference gradient of a scalar function of a matrix.
template <typename T>
Matrix<T> fd_gradient(const std::function<T(const Matrix<T>&)>& f,
                      const Matrix<T>& x, T h) {
  Matrix<T> g(x.rows(), x.cols());
  Matrix<T> xp = x, xm = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp.data()[i] = x.data()[i] + h;
    xm.data()[i] = x.data()[i] - h;
    g.data()[i] = (f(xp) - f(xm)) / (T(2) * h);
    xp.data()[i] = x.data()[i];
    xm.data()[i] = x.data()[i];
  }
  return g;
}

// Central finite-difference directional derivative of a matrix-valued map.
template <typename T>
Matrix<T> fd_directional(
    const std::function<Matrix<T>(const Matrix<T>&)>& f, const Matrix<T>& x,
    const Matrix<T>& dir, T h) {
  Matrix<T> xp = landing::add_scaled(x, h, dir);
  Matrix<T> xm = landing::add_scaled(x, -h, dir);
  Matrix<T> d = f(xp) - f(xm);
  d *= T(1) / (T(2) * h);
  return d;
}

template <typename T>
T rel_error(const Matrix<T>& got, const Matrix<T>& want) {
  const T denom = std::max(landing::frob_norm(want), T(1e-12));
  return landing::frob_norm(got - want) / denom;
}

}  // namespace oracle
