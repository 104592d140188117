#include <cmath>

#include "doctest.h"
#include "landing/linalg.hpp"
#include "oracles.hpp"

namespace {

using landing::Matrix;
using landing::MatrixD;
using landing::Rng;

TEST_CASE("qr_positive reproduces the input and matches Gram-Schmidt") {
  Rng rng(1);
  for (auto [n, p] : {std::pair<std::size_t, std::size_t>{6, 6}, {8, 5}, {12, 3}}) {
    MatrixD m = landing::random_gaussian<double>(rng, n, p);
    auto qr = landing::qr_positive(m);

    // Orthonormal columns, upper-triangular R, positive diagonal, Q R = M.
    MatrixD qtq = landing::multiply_tn(qr.q, qr.q);
    CHECK(landing::frob_norm(qtq - MatrixD::identity(p)) <= 1e-13);
    for (std::size_t i = 0; i < p; ++i) {
      CHECK(qr.r(i, i) > 0.0);
      for (std::size_t j = 0; j < i; ++j) CHECK(qr.r(i, j) == 0.0);
    }
    CHECK(landing::frob_norm(qr.q * qr.r - m) <= 1e-12 * landing::frob_norm(m));

    // The positive-diagonal convention makes the factorization unique, so the
    // result must agree with the independent modified Gram-Schmidt oracle.
    MatrixD oq(1, 1), orr(1, 1);
    oracle::mgs_qr(m, oq, orr);
    CHECK(landing::frob_norm(qr.q - oq) <= 1e-10);
    CHECK(landing::frob_norm(qr.r - orr) <= 1e-10);
  }
}

TEST_CASE("qr_positive rejects rank-deficient input") {
  MatrixD m(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    m(i, 0) = double(i + 1);
    m(i, 1) = 2.0 * double(i + 1);  // duplicate direction
  }
  CHECK_THROWS_AS((void)landing::qr_positive(m), landing::RankDeficiencyError);
}

TEST_CASE("solve and inverse") {
  Rng rng(2);
  MatrixD m = landing::random_gaussian<double>(rng, 7, 7);
  MatrixD b = landing::random_gaussian<double>(rng, 7, 3);
  MatrixD z = landing::solve(m, b);
  CHECK(landing::frob_norm(m * z - b) <= 1e-10 * landing::frob_norm(b));
  MatrixD inv = landing::inverse(m);
  CHECK(landing::frob_norm(m * inv - MatrixD::identity(7)) <= 1e-10);

  MatrixD sing(3, 3);
  sing(0, 0) = 1.0;
  sing(1, 1) = 1.0;  // third row/column zero
  CHECK_THROWS_AS((void)landing::solve(sing, MatrixD::identity(3)),
                  landing::SingularMatrixError);
}

TEST_CASE("determinant") {
  Rng rng(3);
  MatrixD d = MatrixD::identity(3);
  d *= 2.0;
  CHECK(landing::determinant(d) == doctest::Approx(8.0));

  MatrixD q = landing::random_orthogonal<double>(rng, 5);
  CHECK(std::abs(std::abs(landing::determinant(q)) - 1.0) <= 1e-12);

  MatrixD a = landing::random_gaussian<double>(rng, 4, 4);
  MatrixD b = landing::random_gaussian<double>(rng, 4, 4);
  CHECK(landing::determinant(a * b) ==
        doctest::Approx(landing::determinant(a) * landing::determinant(b))
            .epsilon(1e-10));

  MatrixD sing(2, 2);
  sing(0, 0) = 1.0;
  CHECK(landing::determinant(sing) == 0.0);
}

TEST_CASE("expm_skew matches Taylor oracle and is orthogonal") {
  Rng rng(4);
  for (double scale : {0.1, 1.0, 20.0}) {  // 20 exercises scaling-and-squaring
    MatrixD a = landing::random_skew<double>(rng, 6, scale);
    MatrixD e = landing::expm_skew(a);
    CHECK(oracle::rel_error(e, oracle::expm_taylor(a)) <= 1e-11);
    CHECK(landing::frob_norm(landing::multiply_nt(e, e) - MatrixD::identity(6)) <=
          1e-12);
    // exp(A) exp(-A) = I
    MatrixD am = a;
    am *= -1.0;
    CHECK(landing::frob_norm(e * landing::expm_skew(am) - MatrixD::identity(6)) <=
          1e-12);
  }
  CHECK(landing::frob_norm(landing::expm_skew(MatrixD(3, 3)) -
                           MatrixD::identity(3)) <= 1e-14);
}

TEST_CASE("expm_skew rejects non-skew input") {
  MatrixD m = MatrixD::identity(3);
  CHECK_THROWS_AS((void)landing::expm_skew(m), landing::NonSkewError);
}

TEST_CASE("polar_factor matches Jacobi-SVD oracle") {
  Rng rng(5);
  for (auto [n, p] : {std::pair<std::size_t, std::size_t>{6, 6}, {10, 4}}) {
    MatrixD m = landing::random_gaussian<double>(rng, n, p);
    MatrixD u = landing::polar_factor(m);
    CHECK(landing::frob_norm(landing::multiply_tn(u, u) - MatrixD::identity(p)) <=
          1e-12);
    CHECK(oracle::rel_error(u, oracle::polar_svd(m)) <= 1e-10);
    // U^T M must be symmetric (it is the positive factor of the decomposition).
    MatrixD h = landing::multiply_tn(u, m);
    CHECK(landing::frob_norm(h - h.transposed()) <= 1e-10 * landing::frob_norm(m));
  }
}

TEST_CASE("polar_factor rejects rank-deficient input") {
  MatrixD m(3, 3);
  m(0, 0) = 1.0;
  m(1, 1) = 1.0;
  CHECK_THROWS_AS((void)landing::polar_factor(m), landing::RankDeficiencyError);
}

TEST_CASE("polar_factor converges in fp32") {
  Rng rng(6);
  landing::MatrixF m = landing::random_gaussian<float>(rng, 12, 12);
  landing::MatrixF u = landing::polar_factor(m);
  CHECK(landing::frob_norm(landing::multiply_tn(u, u) -
                           landing::MatrixF::identity(12)) <= 1e-4f);
}

TEST_CASE("random_orthogonal is orthogonal and seed-deterministic") {
  Rng r1(9), r2(9);
  MatrixD q1 = landing::random_orthogonal<double>(r1, 8);
  MatrixD q2 = landing::random_orthogonal<double>(r2, 8);
  CHECK(landing::frob_norm(q1 - q2) == 0.0);
  CHECK(landing::frob_norm(landing::multiply_nt(q1, q1) - MatrixD::identity(8)) <=
        1e-13);
}

}  // namespace
