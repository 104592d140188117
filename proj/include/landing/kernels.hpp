#pragma once

// Dense row-major arithmetic kernels. A scalar reference implementation is
// always available; an AVX2+FMA variant is selected at runtime on x86-64
// when the CPU supports it. The environment variable LANDING_SIMD can force
// a backend ("scalar" or "avx2").

#include <cstddef>
#include <string>

namespace landing::kern {

template <typename T>
struct Kernels {
  // C (m x n) = A (m x k) * B (k x n)
  void (*matmul_nn)(std::size_t m, std::size_t k, std::size_t n, const T* a,
                    const T* b, T* c);
  // C (m x n) = A (m x k) * B^T, B is n x k
  void (*matmul_nt)(std::size_t m, std::size_t k, std::size_t n, const T* a,
                    const T* b, T* c);
  // C (m x n) = A^T * B, A is k x m, B is k x n
  void (*matmul_tn)(std::size_t m, std::size_t k, std::size_t n, const T* a,
                    const T* b, T* c);
  // y += alpha * x
  void (*axpy)(std::size_t n, T alpha, const T* x, T* y);
  T (*dot)(std::size_t n, const T* x, const T* y);
  T (*norm2_sq)(std::size_t n, const T* x);
};

namespace scalar {
template <typename T> const Kernels<T>& table();
}

namespace avx2 {
bool available();
template <typename T> const Kernels<T>& table();
}

// Runtime-selected backend, resolved once on first use.
template <typename T> const Kernels<T>& active();

// Name of the backend `active()` resolves to ("scalar" or "avx2").
std::string active_backend_name();

}  // namespace landing::kern
