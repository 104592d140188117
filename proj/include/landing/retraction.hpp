#pragma once

// The four feasible update maps in relative form R(X, A) with A skew:
// exponential, projection (polar), Cayley, and positive-diagonal QR.

#include <iostream>
#include <mutex>
#include <stdexcept>

#include "landing/geometry.hpp"
#include "landing/linalg.hpp"
#include "landing/matrix.hpp"

namespace landing {

enum class RetractionKind { Exponential, Projection, Cayley, QR };

inline const char* to_string(RetractionKind k) {
  switch (k) {
    case RetractionKind::Exponential: return "exponential";
    case RetractionKind::Projection: return "projection";
    case RetractionKind::Cayley: return "cayley";
    case RetractionKind::QR: return "qr";
  }
  return "?";
}

namespace detail {

// The drift experiments deliberately feed non-orthogonal X, so a drifted
// input is only worth a warning, and only once per process.
template <typename T>
void warn_if_drifted(const Matrix<T>& x) {
  static std::once_flag flag;
  const T tol = T(1e-6) * tol_factor<T>() *
                std::sqrt(static_cast<T>(x.rows()));
  if (ortho_residual(x, ManifoldKind::Orthogonal) > tol)
    std::call_once(flag, [] {
      std::cerr << "landing: retract() called with non-orthogonal X "
                   "(reported once)\n";
    });
}

template <typename T>
void require_skew(const Matrix<T>& a) {
  const T nrm = frob_norm(a);
  if (frob_norm(a + a.transposed()) >
      T(1e-10) * tol_factor<T>() * std::max(nrm, T(1)))
    throw std::invalid_argument("retract: direction is not skew-symmetric");
}

}  // namespace detail

template <typename T>
Matrix<T> retract(RetractionKind kind, const Matrix<T>& x, const Matrix<T>& a) {
  if (!x.square() || !a.square() || x.rows() != a.rows())
    throw std::invalid_argument("retract: square X and A of equal size");
  detail::warn_if_drifted(x);
  detail::require_skew(a);
  switch (kind) {
    case RetractionKind::Exponential:
      return expm_skew(a) * x;
    case RetractionKind::Projection:
      return polar_factor(x + a * x);
    case RetractionKind::Cayley: {
      Matrix<T> lhs = add_scaled(Matrix<T>::identity(x.rows()), T(-0.5), a);
      Matrix<T> rhs = add_scaled(Matrix<T>::identity(x.rows()), T(0.5), a) * x;
      return solve(lhs, rhs);
    }
    case RetractionKind::QR:
      return qr_positive(x + a * x).q;
  }
  throw std::invalid_argument("retract: unknown kind");
}

// X <- R(X, -eta psi(X)), square case.
template <typename T>
Matrix<T> riemannian_gd_step(const ProblemHandle<T>& problem,
                             const Matrix<T>& x, T eta, RetractionKind kind) {
  if (eta <= T(0)) throw std::invalid_argument("riemannian_gd_step: eta > 0");
  Matrix<T> a = relative_gradient(problem, x);
  a *= -eta;
  return retract(kind, x, a);
}

// Stiefel variant; only the retractions that act on X - eta psi(X) X without
// forming an n x n matrix are offered.
template <typename T>
Matrix<T> stiefel_gd_step(const ProblemHandle<T>& problem, const Matrix<T>& x,
                          T eta, RetractionKind kind) {
  if (eta <= T(0)) throw std::invalid_argument("stiefel_gd_step: eta > 0");
  Matrix<T> y = add_scaled(x, -eta, stiefel_riemannian_gradient(problem, x));
  switch (kind) {
    case RetractionKind::Projection:
      return polar_factor(y);
    case RetractionKind::QR:
      return qr_positive(y).q;
    default:
      throw std::invalid_argument(
          "stiefel_gd_step: only projection and QR retractions on Stiefel");
  }
}

}  // namespace landing
