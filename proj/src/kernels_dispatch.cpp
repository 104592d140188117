#include "landing/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace landing::kern {

namespace {

bool use_avx2() {
  static const bool chosen = [] {
    const char* force = std::getenv("LANDING_SIMD");
    if (force != nullptr) {
      if (std::strcmp(force, "scalar") == 0) return false;
      if (std::strcmp(force, "avx2") == 0) return avx2::available();
    }
    return avx2::available();
  }();
  return chosen;
}

}  // namespace

template <> const Kernels<double>& active<double>() {
  return use_avx2() ? avx2::table<double>() : scalar::table<double>();
}

template <> const Kernels<float>& active<float>() {
  return use_avx2() ? avx2::table<float>() : scalar::table<float>();
}

std::string active_backend_name() { return use_avx2() ? "avx2" : "scalar"; }

}  // namespace landing::kern
