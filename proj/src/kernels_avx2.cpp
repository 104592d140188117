#include "landing/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define LANDING_X86 1
#include <immintrin.h>
#else
#define LANDING_X86 0
#endif

namespace landing::kern::avx2 {

#if LANDING_X86

bool available() { return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"); }

namespace {

// double lane width 4, float lane width 8

__attribute__((target("avx2,fma"))) void matmul_nn_d(std::size_t m,
                                                     std::size_t k,
                                                     std::size_t n,
                                                     const double* a,
                                                     const double* b,
                                                     double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) _mm256_storeu_pd(ci + j, _mm256_setzero_pd());
    for (; j < n; ++j) ci[j] = 0.0;
    const double* ai = a + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      const __m256d av = _mm256_set1_pd(ai[l]);
      const double* bl = b + l * n;
      std::size_t jj = 0;
      for (; jj + 4 <= n; jj += 4) {
        __m256d cv = _mm256_loadu_pd(ci + jj);
        cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(bl + jj), cv);
        _mm256_storeu_pd(ci + jj, cv);
      }
      for (; jj < n; ++jj) ci[jj] += ai[l] * bl[jj];
    }
  }
}

__attribute__((target("avx2,fma"))) void matmul_nn_f(std::size_t m,
                                                     std::size_t k,
                                                     std::size_t n,
                                                     const float* a,
                                                     const float* b, float* c) {
  for (std::size_t i = 0; i < m; ++i) {
    float* ci = c + i * n;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) _mm256_storeu_ps(ci + j, _mm256_setzero_ps());
    for (; j < n; ++j) ci[j] = 0.0f;
    const float* ai = a + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      const __m256 av = _mm256_set1_ps(ai[l]);
      const float* bl = b + l * n;
      std::size_t jj = 0;
      for (; jj + 8 <= n; jj += 8) {
        __m256 cv = _mm256_loadu_ps(ci + jj);
        cv = _mm256_fmadd_ps(av, _mm256_loadu_ps(bl + jj), cv);
        _mm256_storeu_ps(ci + jj, cv);
      }
      for (; jj < n; ++jj) ci[jj] += ai[l] * bl[jj];
    }
  }
}

__attribute__((target("avx2,fma"))) double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

__attribute__((target("avx2,fma"))) float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 1));
  return _mm_cvtss_f32(lo);
}

__attribute__((target("avx2,fma"))) void matmul_nt_d(std::size_t m,
                                                     std::size_t k,
                                                     std::size_t n,
                                                     const double* a,
                                                     const double* b,
                                                     double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      __m256d acc = _mm256_setzero_pd();
      std::size_t l = 0;
      for (; l + 4 <= k; l += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(ai + l), _mm256_loadu_pd(bj + l),
                              acc);
      double s = hsum(acc);
      for (; l < k; ++l) s += ai[l] * bj[l];
      c[i * n + j] = s;
    }
  }
}

__attribute__((target("avx2,fma"))) void matmul_nt_f(std::size_t m,
                                                     std::size_t k,
                                                     std::size_t n,
                                                     const float* a,
                                                     const float* b, float* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const float* bj = b + j * k;
      __m256 acc = _mm256_setzero_ps();
      std::size_t l = 0;
      for (; l + 8 <= k; l += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(ai + l), _mm256_loadu_ps(bj + l),
                              acc);
      float s = hsum(acc);
      for (; l < k; ++l) s += ai[l] * bj[l];
      c[i * n + j] = s;
    }
  }
}

__attribute__((target("avx2,fma"))) void matmul_tn_d(std::size_t m,
                                                     std::size_t k,
                                                     std::size_t n,
                                                     const double* a,
                                                     const double* b,
                                                     double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) _mm256_storeu_pd(ci + j, _mm256_setzero_pd());
    for (; j < n; ++j) ci[j] = 0.0;
    for (std::size_t l = 0; l < k; ++l) {
      const __m256d av = _mm256_set1_pd(a[l * m + i]);
      const double* bl = b + l * n;
      std::size_t jj = 0;
      for (; jj + 4 <= n; jj += 4) {
        __m256d cv = _mm256_loadu_pd(ci + jj);
        cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(bl + jj), cv);
        _mm256_storeu_pd(ci + jj, cv);
      }
      for (; jj < n; ++jj) ci[jj] += a[l * m + i] * bl[jj];
    }
  }
}

__attribute__((target("avx2,fma"))) void matmul_tn_f(std::size_t m,
                                                     std::size_t k,
                                                     std::size_t n,
                                                     const float* a,
                                                     const float* b, float* c) {
  for (std::size_t i = 0; i < m; ++i) {
    float* ci = c + i * n;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) _mm256_storeu_ps(ci + j, _mm256_setzero_ps());
    for (; j < n; ++j) ci[j] = 0.0f;
    for (std::size_t l = 0; l < k; ++l) {
      const __m256 av = _mm256_set1_ps(a[l * m + i]);
      const float* bl = b + l * n;
      std::size_t jj = 0;
      for (; jj + 8 <= n; jj += 8) {
        __m256 cv = _mm256_loadu_ps(ci + jj);
        cv = _mm256_fmadd_ps(av, _mm256_loadu_ps(bl + jj), cv);
        _mm256_storeu_ps(ci + jj, cv);
      }
      for (; jj < n; ++jj) ci[jj] += a[l * m + i] * bl[jj];
    }
  }
}

__attribute__((target("avx2,fma"))) void axpy_d(std::size_t n, double alpha,
                                                const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

__attribute__((target("avx2,fma"))) void axpy_f(std::size_t n, float alpha,
                                                const float* x, float* y) {
  const __m256 av = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 yv = _mm256_loadu_ps(y + i);
    yv = _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), yv);
    _mm256_storeu_ps(y + i, yv);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

__attribute__((target("avx2,fma"))) double dot_d(std::size_t n, const double* x,
                                                 const double* y) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

__attribute__((target("avx2,fma"))) float dot_f(std::size_t n, const float* x,
                                                const float* y) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc);
  float s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

__attribute__((target("avx2,fma"))) double norm2_sq_d(std::size_t n,
                                                      const double* x) {
  return dot_d(n, x, x);
}

__attribute__((target("avx2,fma"))) float norm2_sq_f(std::size_t n,
                                                     const float* x) {
  return dot_f(n, x, x);
}

const Kernels<double> kTableD = {&matmul_nn_d, &matmul_nt_d, &matmul_tn_d,
                                 &axpy_d,      &dot_d,       &norm2_sq_d};
const Kernels<float> kTableF = {&matmul_nn_f, &matmul_nt_f, &matmul_tn_f,
                                &axpy_f,      &dot_f,       &norm2_sq_f};

}  // namespace

template <> const Kernels<double>& table<double>() { return kTableD; }
template <> const Kernels<float>& table<float>() { return kTableF; }

#else  // !LANDING_X86

bool available() { return false; }

template <> const Kernels<double>& table<double>() {
  return scalar::table<double>();
}
template <> const Kernels<float>& table<float>() {
  return scalar::table<float>();
}

#endif

}  // namespace landing::kern::avx2
