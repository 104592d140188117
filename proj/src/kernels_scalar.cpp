#include "landing/kernels.hpp"

namespace landing::kern::scalar {
namespace {

// Reference kernels. Accumulation order is fixed (k innermost-to-outermost as
// written) so results are reproducible run to run.

template <typename T>
void matmul_nn(std::size_t m, std::size_t k, std::size_t n, const T* a,
               const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = T(0);
    const T* ai = a + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      const T ail = ai[l];
      const T* bl = b + l * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += ail * bl[j];
    }
  }
}

template <typename T>
void matmul_nt(std::size_t m, std::size_t k, std::size_t n, const T* a,
               const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* bj = b + j * k;
      T s = T(0);
      for (std::size_t l = 0; l < k; ++l) s += ai[l] * bj[l];
      c[i * n + j] = s;
    }
  }
}

template <typename T>
void matmul_tn(std::size_t m, std::size_t k, std::size_t n, const T* a,
               const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = T(0);
    for (std::size_t l = 0; l < k; ++l) {
      const T ali = a[l * m + i];
      const T* bl = b + l * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += ali * bl[j];
    }
  }
}

template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
T dot(std::size_t n, const T* x, const T* y) {
  T s = T(0);
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

template <typename T>
T norm2_sq(std::size_t n, const T* x) {
  T s = T(0);
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

template <typename T>
const Kernels<T> kTable = {&matmul_nn<T>, &matmul_nt<T>, &matmul_tn<T>,
                           &axpy<T>,      &dot<T>,       &norm2_sq<T>};

}  // namespace

template <> const Kernels<float>& table<float>() { return kTable<float>; }
template <> const Kernels<double>& table<double>() { return kTable<double>; }

}  // namespace landing::kern::scalar
