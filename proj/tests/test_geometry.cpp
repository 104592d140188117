#include <cmath>

#include "doctest.h"
#include "landing/geometry.hpp"
#include "landing/linalg.hpp"
#include "landing/problems.hpp"
#include "oracles.hpp"

namespace {

using landing::ManifoldKind;
using landing::Matrix;
using landing::MatrixD;
using landing::ProblemHandle;
using landing::Rng;

TEST_CASE("skew_part + sym_part decompose the matrix") {
  Rng rng(11);
  MatrixD m = landing::random_gaussian<double>(rng, 5, 5);
  MatrixD sk = landing::skew_part(m);
  MatrixD sy = landing::sym_part(m);
  CHECK(landing::frob_norm(sk + sy - m) <= 1e-14);
  CHECK(landing::frob_norm(sk + sk.transposed()) <= 1e-14);
  CHECK(landing::frob_norm(sy - sy.transposed()) <= 1e-14);
}

TEST_CASE("relative gradient of a linear objective") {
  // f(X) = <C, X> has egrad = C, so psi = Skew(C X^T) by definition.
  Rng rng(12);
  MatrixD c = landing::random_gaussian<double>(rng, 4, 4);
  MatrixD x = landing::random_gaussian<double>(rng, 4, 4);
  ProblemHandle<double> h;
  h.value = [&](const MatrixD& m) { return landing::frob_dot(c, m); };
  h.egrad = [&](const MatrixD&) { return c; };
  MatrixD psi = landing::relative_gradient(h, x);
  CHECK(landing::frob_norm(psi - landing::skew_part(landing::multiply_nt(c, x))) <=
        1e-14);
  CHECK(landing::frob_norm(landing::riemannian_gradient(h, x) - psi * x) <=
        1e-14);
}

TEST_CASE("penalty gradient matches finite differences of the penalty") {
  Rng rng(13);
  for (ManifoldKind kind : {ManifoldKind::Orthogonal, ManifoldKind::Stiefel}) {
    const std::size_t n = kind == ManifoldKind::Orthogonal ? 5 : 7;
    MatrixD x = landing::random_gaussian<double>(rng, n, 5);
    MatrixD g = landing::penalty_gradient(x, kind);
    MatrixD fd = oracle::fd_gradient<double>(
        [&](const MatrixD& m) { return landing::penalty(m, kind); }, x, 1e-5);
    CHECK(oracle::rel_error(fd, g) <= 1e-7);
  }
}

TEST_CASE("gram defect and residual basics") {
  Rng rng(14);
  MatrixD q = landing::random_orthogonal<double>(rng, 6);
  CHECK(landing::ortho_residual(q, ManifoldKind::Orthogonal) <= 1e-13);
  MatrixD scaled = q;
  scaled *= 2.0;
  // Delta = 3 I_6, so the residual is 3 sqrt(6).
  CHECK(landing::ortho_residual(scaled, ManifoldKind::Orthogonal) ==
        doctest::Approx(3.0 * std::sqrt(6.0)));
  CHECK(landing::penalty(scaled, ManifoldKind::Orthogonal) ==
        doctest::Approx(9.0 * 6.0 / 4.0));
  // The shape-inferring overload picks the Stiefel convention for tall input.
  MatrixD tall = landing::random_gaussian<double>(rng, 9, 3);
  CHECK(landing::ortho_residual(tall) ==
        doctest::Approx(landing::ortho_residual(tall, ManifoldKind::Stiefel)));
}

TEST_CASE("tangent and penalty directions are orthogonal at every X") {
  Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t p = 2 + rng.index(8);
    MatrixD x = landing::random_gaussian<double>(rng, p, p);
    MatrixD c = landing::random_gaussian<double>(rng, p, p);
    ProblemHandle<double> h;
    h.egrad = [&](const MatrixD&) { return c; };
    MatrixD gr = landing::riemannian_gradient(h, x);
    MatrixD gn = landing::penalty_gradient(x, ManifoldKind::Orthogonal);
    const double ip = landing::frob_dot(gr, gn);
    const double scale =
        std::max(landing::frob_norm(gr) * landing::frob_norm(gn), 1e-30);
    CHECK(std::abs(ip) / scale <= 1e-12);
  }
}

TEST_CASE("relative Hessian apply is the derivative of the relative gradient") {
  Rng rng(16);
  landing::ProcrustesProblem<double> problem =
      landing::ProcrustesProblem<double>::conditioned(rng, 5);
  ProblemHandle<double> h = problem.handle();
  MatrixD x = landing::random_orthogonal<double>(rng, 5);
  MatrixD a = landing::random_skew<double>(rng, 5);

  MatrixD hv = landing::relative_hessian_apply(h, x, a);
  // Derivative of t -> psi((I + t A) X) at t = 0 via central differences.
  const double t = 1e-6;
  auto psi_at = [&](double s) {
    MatrixD xs = landing::add_scaled(x, s, a * x);
    return landing::relative_gradient(h, xs);
  };
  MatrixD fd = psi_at(t) - psi_at(-t);
  fd *= 1.0 / (2.0 * t);
  CHECK(oracle::rel_error(fd, hv) <= 1e-6);
}

TEST_CASE("relative Hessian requires an ehess_vec") {
  ProblemHandle<double> h;
  h.egrad = [](const MatrixD& x) { return x; };
  MatrixD x = MatrixD::identity(3);
  CHECK_THROWS_AS((void)landing::relative_hessian_apply(h, x, MatrixD(3, 3)),
                  std::invalid_argument);
}

TEST_CASE("factored Stiefel gradient equals the naive n x n construction") {
  Rng rng(17);
  for (auto [n, p] : {std::pair<std::size_t, std::size_t>{9, 4}, {20, 3}}) {
    MatrixD x = landing::random_gaussian<double>(rng, n, p);
    MatrixD g = landing::random_gaussian<double>(rng, n, p);
    MatrixD naive =
        landing::skew_part(landing::multiply_nt(g, x)) * x;  // n x n on purpose
    MatrixD fast = landing::stiefel_riemannian_gradient_from_egrad(g, x);
    CHECK(oracle::rel_error(fast, naive) <= 1e-12);
    const double naive_norm =
        landing::frob_norm(landing::skew_part(landing::multiply_nt(g, x)));
    CHECK(landing::stiefel_relative_grad_norm_from_egrad(g, x) ==
          doctest::Approx(naive_norm).epsilon(1e-10));
  }
}

TEST_CASE("geometry kind constructors validate shapes") {
  CHECK_THROWS_AS((void)landing::GeometryKind::stiefel(3, 5),
                  std::invalid_argument);
  CHECK(landing::GeometryKind::orthogonal(4).rows == 4);
}

}  // namespace
