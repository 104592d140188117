#pragma once

// Relative derivatives and the orthogonality penalty, on the orthogonal group
// (square X, X X^T = I) and the Stiefel manifold (n x p, X^T X = I). The
// relative gradient psi(X) = Skew(grad_f(X) X^T) encodes the Riemannian
// gradient as psi(X) X; on Stiefel only the factored products are formed, so
// no n x n matrix ever materializes.

#include <functional>
#include <optional>
#include <stdexcept>

#include "landing/matrix.hpp"

namespace landing {

enum class ManifoldKind { Orthogonal, Stiefel };

struct GeometryKind {
  ManifoldKind manifold = ManifoldKind::Orthogonal;
  std::size_t rows = 0;  // n (= p on the orthogonal group)
  std::size_t cols = 0;  // p

  static GeometryKind orthogonal(std::size_t p) {
    return {ManifoldKind::Orthogonal, p, p};
  }
  static GeometryKind stiefel(std::size_t n, std::size_t p) {
    if (n < p) throw std::invalid_argument("stiefel: need n >= p");
    return {ManifoldKind::Stiefel, n, p};
  }
};

// Objective bundle. `egrad` must be consistent with `value` under finite
// differences; if `stoch_egrad` is present, its average over samples must
// match `egrad`.
template <typename T>
struct ProblemHandle {
  std::function<T(const Matrix<T>&)> value;
  std::function<Matrix<T>(const Matrix<T>&)> egrad;
  std::function<Matrix<T>(const Matrix<T>&, const Matrix<T>&)> ehess_vec;
  std::function<Matrix<T>(const Matrix<T>&, std::size_t)> stoch_egrad;
  std::size_t n_samples = 1;
};

template <typename T>
Matrix<T> skew_part(const Matrix<T>& m) {
  Matrix<T> r(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      r(i, j) = (m(i, j) - m(j, i)) / T(2);
  return r;
}

template <typename T>
Matrix<T> sym_part(const Matrix<T>& m) {
  Matrix<T> r(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      r(i, j) = (m(i, j) + m(j, i)) / T(2);
  return r;
}

// psi(X) = Skew(grad_f(X) X^T), square case.
template <typename T>
Matrix<T> relative_gradient(const ProblemHandle<T>& problem,
                            const Matrix<T>& x) {
  return skew_part(multiply_nt(problem.egrad(x), x));
}

template <typename T>
Matrix<T> relative_gradient_from_egrad(const Matrix<T>& egrad,
                                       const Matrix<T>& x) {
  return skew_part(multiply_nt(egrad, x));
}

// grad f(X) = psi(X) X.
template <typename T>
Matrix<T> riemannian_gradient(const ProblemHandle<T>& problem,
                              const Matrix<T>& x) {
  return relative_gradient(problem, x) * x;
}

// H_X(A) = Skew(H_X(A X) X^T - grad_f(X) X^T A), linear in skew A.
template <typename T>
Matrix<T> relative_hessian_apply(const ProblemHandle<T>& problem,
                                 const Matrix<T>& x, const Matrix<T>& a) {
  if (!problem.ehess_vec)
    throw std::invalid_argument(
        "relative_hessian_apply: problem has no Hessian-vector product");
  Matrix<T> h = multiply_nt(problem.ehess_vec(x, a * x), x);
  h -= multiply_nt(problem.egrad(x), x) * a;
  return skew_part(h);
}

// Residual Delta = X X^T - I (orthogonal) or X^T X - I (Stiefel).
template <typename T>
Matrix<T> gram_defect(const Matrix<T>& x, ManifoldKind kind) {
  Matrix<T> g = kind == ManifoldKind::Orthogonal ? multiply_nt(x, x)
                                                 : multiply_tn(x, x);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= T(1);
  return g;
}

// N(X) = ||Delta||^2 / 4
template <typename T>
T penalty(const Matrix<T>& x, ManifoldKind kind) {
  return frob_norm_sq(gram_defect(x, kind)) / T(4);
}

// grad N(X) = Delta X (orthogonal) or X Delta (Stiefel).
template <typename T>
Matrix<T> penalty_gradient(const Matrix<T>& x, ManifoldKind kind) {
  Matrix<T> d = gram_defect(x, kind);
  return kind == ManifoldKind::Orthogonal ? d * x : x * d;
}

// ||Delta||_F, the feasibility gap.
template <typename T>
T ortho_residual(const Matrix<T>& x, ManifoldKind kind) {
  return frob_norm(gram_defect(x, kind));
}

template <typename T>
T ortho_residual(const Matrix<T>& x) {
  return ortho_residual(x, x.square() ? ManifoldKind::Orthogonal
                                      : ManifoldKind::Stiefel);
}

// psi(X) X on Stiefel in O(n p^2):
//   psi(X) X = (G X^T X - X G^T X) / 2   with G = grad_f(X).
template <typename T>
Matrix<T> stiefel_riemannian_gradient_from_egrad(const Matrix<T>& egrad,
                                                 const Matrix<T>& x) {
  Matrix<T> xtx = multiply_tn(x, x);
  Matrix<T> gtx = multiply_tn(egrad, x);
  Matrix<T> r = egrad * xtx;
  r -= x * gtx;
  r *= T(0.5);
  return r;
}

template <typename T>
Matrix<T> stiefel_riemannian_gradient(const ProblemHandle<T>& problem,
                                      const Matrix<T>& x) {
  return stiefel_riemannian_gradient_from_egrad(problem.egrad(x), x);
}

// ||psi(X)||_F in O(n p^2):
//   ||psi||^2 = [tr((G^T G)(X^T X)) - tr((X^T G)(X^T G))] / 2.
template <typename T>
T stiefel_relative_grad_norm_from_egrad(const Matrix<T>& egrad,
                                        const Matrix<T>& x) {
  Matrix<T> gtg = multiply_tn(egrad, egrad);
  Matrix<T> xtx = multiply_tn(x, x);
  Matrix<T> xtg = multiply_tn(x, egrad);
  const T t1 = frob_dot(gtg, xtx.transposed());
  const T t2 = frob_dot(xtg, xtg.transposed());
  const T sq = (t1 - t2) / T(2);
  return sq > T(0) ? std::sqrt(sq) : T(0);
}

template <typename T>
T stiefel_relative_grad_norm(const ProblemHandle<T>& problem,
                             const Matrix<T>& x) {
  return stiefel_relative_grad_norm_from_egrad(problem.egrad(x), x);
}

}  // namespace landing
