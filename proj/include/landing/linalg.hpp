#pragma once

// Dense kernels used by the retractions and the experiment harness:
// Householder QR with positive-diagonal convention, skew matrix exponential
// (degree-13 Pade with scaling and squaring), LU solve, polar decomposition
// via a scaled Newton iteration.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "landing/matrix.hpp"
#include "landing/rng.hpp"

namespace landing {

struct RankDeficiencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularMatrixError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonSkewError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T>
struct QrResult {
  Matrix<T> q;  // orthonormal columns, rows(M) x cols(M)
  Matrix<T> r;  // upper triangular, cols(M) x cols(M), positive diagonal
};

// Householder QR of an n x p matrix (n >= p). The factorization is made
// unique by flipping signs so that diag(R) > 0.
template <typename T>
QrResult<T> qr_positive(const Matrix<T>& m) {
  const std::size_t n = m.rows();
  const std::size_t p = m.cols();
  if (n < p) throw std::invalid_argument("qr_positive: need rows >= cols");

  Matrix<T> a = m;  // reduced in place to R
  std::vector<std::vector<T>> vs;
  vs.reserve(p);

  for (std::size_t j = 0; j < p; ++j) {
    // Householder vector annihilating a(j+1..n-1, j)
    T norm_sq = T(0);
    for (std::size_t i = j; i < n; ++i) norm_sq += a(i, j) * a(i, j);
    const T norm = std::sqrt(norm_sq);
    std::vector<T> v(n - j, T(0));
    T beta = T(0);
    if (norm > T(0)) {
      const T alpha = a(j, j) >= T(0) ? -norm : norm;
      v[0] = a(j, j) - alpha;
      for (std::size_t i = j + 1; i < n; ++i) v[i - j] = a(i, j);
      T vnorm_sq = T(0);
      for (T x : v) vnorm_sq += x * x;
      if (vnorm_sq > T(0)) beta = T(2) / vnorm_sq;
      a(j, j) = alpha;
      for (std::size_t i = j + 1; i < n; ++i) a(i, j) = T(0);
      // Apply reflector to the trailing columns.
      for (std::size_t c = j + 1; c < p; ++c) {
        T s = T(0);
        for (std::size_t i = j; i < n; ++i) s += v[i - j] * a(i, c);
        s *= beta;
        for (std::size_t i = j; i < n; ++i) a(i, c) -= s * v[i - j];
      }
    }
    vs.push_back(std::move(v));
  }

  const T scale = frob_norm(m);
  const T rank_tol = T(1e-12) * tol_factor<T>() * scale;
  for (std::size_t j = 0; j < p; ++j)
    if (std::abs(a(j, j)) < rank_tol)
      throw RankDeficiencyError("qr_positive: rank-deficient input");

  // Thin Q: apply reflectors in reverse to the first p columns of I_n.
  Matrix<T> q(n, p);
  for (std::size_t j = 0; j < p; ++j) q(j, j) = T(1);
  for (std::size_t j = p; j-- > 0;) {
    const std::vector<T>& v = vs[j];
    T vnorm_sq = T(0);
    for (T x : v) vnorm_sq += x * x;
    if (vnorm_sq == T(0)) continue;
    const T beta = T(2) / vnorm_sq;
    for (std::size_t c = 0; c < p; ++c) {
      T s = T(0);
      for (std::size_t i = j; i < n; ++i) s += v[i - j] * q(i, c);
      s *= beta;
      for (std::size_t i = j; i < n; ++i) q(i, c) -= s * v[i - j];
    }
  }

  // Positive-diagonal convention.
  Matrix<T> r(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) r(i, j) = a(i, j);
  for (std::size_t i = 0; i < p; ++i) {
    if (r(i, i) < T(0)) {
      for (std::size_t j = i; j < p; ++j) r(i, j) = -r(i, j);
      for (std::size_t k = 0; k < n; ++k) q(k, i) = -q(k, i);
    }
  }
  return {std::move(q), std::move(r)};
}

// Solves M Z = B by LU with partial pivoting.
template <typename T>
Matrix<T> solve(const Matrix<T>& m, const Matrix<T>& b) {
  if (!m.square() || m.rows() != b.rows())
    throw std::invalid_argument("solve: shape mismatch");
  const std::size_t p = m.rows();
  Matrix<T> lu = m;
  Matrix<T> z = b;
  const T pivot_tol = T(1e-12) * tol_factor<T>() * frob_norm(m);

  std::vector<std::size_t> perm(p);
  for (std::size_t k = 0; k < p; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < p; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    if (std::abs(lu(piv, k)) < pivot_tol)
      throw SingularMatrixError("solve: singular matrix");
    if (piv != k) {
      for (std::size_t j = 0; j < p; ++j) std::swap(lu(k, j), lu(piv, j));
      for (std::size_t j = 0; j < z.cols(); ++j) std::swap(z(k, j), z(piv, j));
    }
    const T inv = T(1) / lu(k, k);
    for (std::size_t i = k + 1; i < p; ++i) {
      const T f = lu(i, k) * inv;
      lu(i, k) = f;
      for (std::size_t j = k + 1; j < p; ++j) lu(i, j) -= f * lu(k, j);
      for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) -= f * z(k, j);
    }
  }
  for (std::size_t k = p; k-- > 0;) {
    const T inv = T(1) / lu(k, k);
    for (std::size_t j = 0; j < z.cols(); ++j) {
      T s = z(k, j);
      for (std::size_t i = k + 1; i < p; ++i) s -= lu(k, i) * z(i, j);
      z(k, j) = s * inv;
    }
  }
  return z;
}

template <typename T>
Matrix<T> inverse(const Matrix<T>& m) {
  return solve(m, Matrix<T>::identity(m.rows()));
}

// Determinant by LU with partial pivoting; returns 0 for numerically
// singular input rather than throwing.
template <typename T>
T determinant(const Matrix<T>& m) {
  if (!m.square()) throw std::invalid_argument("determinant: square input");
  const std::size_t p = m.rows();
  Matrix<T> lu = m;
  T det = T(1);
  for (std::size_t k = 0; k < p; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < p; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    if (lu(piv, k) == T(0)) return T(0);
    if (piv != k) {
      for (std::size_t j = 0; j < p; ++j) std::swap(lu(k, j), lu(piv, j));
      det = -det;
    }
    det *= lu(k, k);
    const T inv = T(1) / lu(k, k);
    for (std::size_t i = k + 1; i < p; ++i) {
      const T f = lu(i, k) * inv;
      for (std::size_t j = k + 1; j < p; ++j) lu(i, j) -= f * lu(k, j);
    }
  }
  return det;
}

namespace detail {

template <typename T>
T one_norm(const Matrix<T>& m) {
  T best = T(0);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    T s = T(0);
    for (std::size_t i = 0; i < m.rows(); ++i) s += std::abs(m(i, j));
    best = std::max(best, s);
  }
  return best;
}

}  // namespace detail

// exp(A) for skew-symmetric A: degree-13 Pade approximant with scaling and
// squaring. A is scaled by 2^-s so its 1-norm is below 5.37, the classic
// threshold for the (13,13) approximant, and the result is squared s times.
template <typename T>
Matrix<T> expm_skew(const Matrix<T>& a) {
  if (!a.square()) throw std::invalid_argument("expm_skew: square input only");
  const T nrm = frob_norm(a);
  Matrix<T> sym = a + a.transposed();
  if (frob_norm(sym) > T(1e-10) * tol_factor<T>() * std::max(nrm, T(1)))
    throw NonSkewError("expm_skew: input is not skew-symmetric");

  static const double b[14] = {64764752532480000.0,
                               32382376266240000.0,
                               7771770303897600.0,
                               1187353796428800.0,
                               129060195264000.0,
                               10559470521600.0,
                               670442572800.0,
                               33522128640.0,
                               1323241920.0,
                               40840800.0,
                               960960.0,
                               16380.0,
                               182.0,
                               1.0};
  const double theta13 = 5.371920351148152;

  const T n1 = detail::one_norm(a);
  int s = 0;
  if (static_cast<double>(n1) > theta13)
    s = static_cast<int>(
        std::ceil(std::log2(static_cast<double>(n1) / theta13)));

  Matrix<T> as = a;
  as *= static_cast<T>(std::ldexp(1.0, -s));

  const std::size_t p = a.rows();
  const Matrix<T> eye = Matrix<T>::identity(p);
  const Matrix<T> a2 = as * as;
  const Matrix<T> a4 = a2 * a2;
  const Matrix<T> a6 = a4 * a2;

  Matrix<T> w1 = add_scaled(T(b[13]) * a6, T(b[11]), a4);
  w1 = add_scaled(std::move(w1), T(b[9]), a2);
  Matrix<T> w2 = add_scaled(T(b[7]) * a6, T(b[5]), a4);
  w2 = add_scaled(std::move(w2), T(b[3]), a2);
  w2 = add_scaled(std::move(w2), T(b[1]), eye);
  Matrix<T> u = as * (a6 * w1 + w2);

  Matrix<T> z1 = add_scaled(T(b[12]) * a6, T(b[10]), a4);
  z1 = add_scaled(std::move(z1), T(b[8]), a2);
  Matrix<T> v = a6 * z1;
  v = add_scaled(std::move(v), T(b[6]), a6);
  v = add_scaled(std::move(v), T(b[4]), a4);
  v = add_scaled(std::move(v), T(b[2]), a2);
  v = add_scaled(std::move(v), T(b[0]), eye);

  Matrix<T> num = v + u;
  Matrix<T> den = v - u;
  Matrix<T> r = solve(den, num);
  for (int i = 0; i < s; ++i) r = r * r;
  return r;
}

// Orthogonal polar factor of a full-rank matrix. Square inputs use the scaled
// Newton iteration Q <- (g Q + Q^{-T} / g) / 2; rectangular inputs (n > p)
// reduce to the square case through a thin QR.
template <typename T>
Matrix<T> polar_factor(const Matrix<T>& m) {
  if (m.rows() < m.cols())
    throw std::invalid_argument("polar_factor: need rows >= cols");
  if (!m.square()) {
    QrResult<T> qr = qr_positive(m);
    return qr.q * polar_factor(qr.r);
  }

  const T conv_tol = T(1e-12) * tol_factor<T>();
  Matrix<T> q = m;
  for (int iter = 0; iter < 100; ++iter) {
    Matrix<T> qinv;
    try {
      qinv = inverse(q);
    } catch (const SingularMatrixError&) {
      throw RankDeficiencyError("polar_factor: rank-deficient input");
    }
    Matrix<T> qinv_t = qinv.transposed();
    // Frobenius scaling accelerates the early iterations.
    const T g = std::sqrt(frob_norm(qinv_t) / frob_norm(q));
    Matrix<T> next = add_scaled(T(g / 2) * q, T(1) / (T(2) * g), qinv_t);
    const T delta = frob_norm(next - q);
    q = std::move(next);
    if (delta <= conv_tol * std::sqrt(static_cast<T>(q.rows()))) return q;
  }
  throw ConvergenceError("polar_factor: Newton iteration did not converge");
}

// Haar-like random orthogonal matrix: positive-diagonal QR of a Gaussian draw.
template <typename T>
Matrix<T> random_orthogonal(Rng& rng, std::size_t p) {
  return qr_positive(random_gaussian<T>(rng, p, p)).q;
}

}  // namespace landing
