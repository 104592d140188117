#include <cmath>
#include <vector>

#include "doctest.h"
#include "landing/kernels.hpp"
#include "landing/rng.hpp"

namespace {

using landing::Rng;
namespace kern = landing::kern;

template <typename T>
std::vector<T> random_vec(Rng& rng, std::size_t n) {
  std::vector<T> v(n);
  for (T& x : v) x = static_cast<T>(rng.normal());
  return v;
}

// Naive reference matmuls, independent of the shipped kernels.
template <typename T>
std::vector<T> naive_nn(std::size_t m, std::size_t k, std::size_t n,
                        const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<T> c(m * n, T(0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l)
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += a[i * k + l] * b[l * n + j];
  return c;
}

template <typename T>
std::vector<T> naive_nt(std::size_t m, std::size_t k, std::size_t n,
                        const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<T> c(m * n, T(0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = 0; l < k; ++l) c[i * n + j] += a[i * k + l] * b[j * k + l];
  return c;
}

template <typename T>
std::vector<T> naive_tn(std::size_t m, std::size_t k, std::size_t n,
                        const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<T> c(m * n, T(0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l)
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += a[l * m + i] * b[l * n + j];
  return c;
}

template <typename T>
T max_diff(const std::vector<T>& a, const std::vector<T>& b) {
  T m = T(0);
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

template <typename T>
void check_backend(const kern::Kernels<T>& k_table, T tol) {
  Rng rng(42);
  const std::size_t shapes[][3] = {{1, 1, 1}, {3, 5, 7},  {8, 8, 8},
                                   {17, 13, 9}, {4, 1, 6}, {33, 29, 31}};
  for (const auto& s : shapes) {
    const std::size_t m = s[0], k = s[1], n = s[2];
    const std::vector<T> a = random_vec<T>(rng, m * k);
    const std::vector<T> b_nn = random_vec<T>(rng, k * n);
    const std::vector<T> b_nt = random_vec<T>(rng, n * k);
    const std::vector<T> a_tn = random_vec<T>(rng, k * m);

    std::vector<T> c(m * n);
    k_table.matmul_nn(m, k, n, a.data(), b_nn.data(), c.data());
    CHECK(max_diff(c, naive_nn(m, k, n, a, b_nn)) <= tol);
    k_table.matmul_nt(m, k, n, a.data(), b_nt.data(), c.data());
    CHECK(max_diff(c, naive_nt(m, k, n, a, b_nt)) <= tol);
    k_table.matmul_tn(m, k, n, a_tn.data(), b_nn.data(), c.data());
    CHECK(max_diff(c, naive_tn(m, k, n, a_tn, b_nn)) <= tol);
  }

  for (std::size_t n : {1u, 7u, 8u, 9u, 63u, 200u}) {
    std::vector<T> x = random_vec<T>(rng, n);
    std::vector<T> y = random_vec<T>(rng, n);
    std::vector<T> y_ref = y;
    const T alpha = T(1.5);
    for (std::size_t i = 0; i < n; ++i) y_ref[i] += alpha * x[i];
    k_table.axpy(n, alpha, x.data(), y.data());
    CHECK(max_diff(y, y_ref) <= tol);

    T dot_ref = T(0), nrm_ref = T(0);
    for (std::size_t i = 0; i < n; ++i) {
      dot_ref += x[i] * y_ref[i];
      nrm_ref += x[i] * x[i];
    }
    CHECK(std::abs(k_table.dot(n, x.data(), y_ref.data()) - dot_ref) <=
          tol * std::max(T(1), std::abs(dot_ref)));
    CHECK(std::abs(k_table.norm2_sq(n, x.data()) - nrm_ref) <=
          tol * std::max(T(1), nrm_ref));
  }
}

TEST_CASE("scalar kernels match naive reference (fp64)") {
  check_backend<double>(kern::scalar::table<double>(), 1e-12);
}

TEST_CASE("scalar kernels match naive reference (fp32)") {
  check_backend<float>(kern::scalar::table<float>(), 1e-3f);
}

TEST_CASE("avx2 kernels match naive reference when available") {
  if (!kern::avx2::available()) {
    MESSAGE("avx2 not available on this machine; skipping");
    return;
  }
  check_backend<double>(kern::avx2::table<double>(), 1e-11);
  check_backend<float>(kern::avx2::table<float>(), 1e-2f);
}

TEST_CASE("avx2 and scalar backends agree on identical inputs") {
  if (!kern::avx2::available()) return;
  Rng rng(7);
  const std::size_t m = 23, k = 19, n = 21;
  const auto a = random_vec<double>(rng, m * k);
  const auto b = random_vec<double>(rng, k * n);
  std::vector<double> cs(m * n), cv(m * n);
  kern::scalar::table<double>().matmul_nn(m, k, n, a.data(), b.data(), cs.data());
  kern::avx2::table<double>().matmul_nn(m, k, n, a.data(), b.data(), cv.data());
  CHECK(max_diff(cs, cv) <= 1e-12);
}

TEST_CASE("active backend name is a known backend") {
  const std::string name = kern::active_backend_name();
  CHECK((name == "scalar" || name == "avx2"));
}

}  // namespace
