#include "idm/numerics.hpp"

#include <cmath>

#if defined(IDM_HAVE_LIBMVEC)
#include <immintrin.h>

extern "C" __m256d _ZGVdN4v_exp(__m256d);
extern "C" __m256d _ZGVdN4v_erfc(__m256d);
#endif

namespace idm {

namespace {

#if defined(IDM_HAVE_LIBMVEC)
const bool kAvx2 = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");

__attribute__((target("avx2,fma"))) std::size_t exp4(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, _ZGVdN4v_exp(_mm256_loadu_pd(x + i)));
  return i;
}

__attribute__((target("avx2,fma"))) std::size_t erfc4(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, _ZGVdN4v_erfc(_mm256_loadu_pd(x + i)));
  return i;
}
#endif

}  // namespace

bool vector_math_enabled() noexcept {
#if defined(IDM_HAVE_LIBMVEC)
  return kAvx2;
#else
  return false;
#endif
}

void exp_batch(std::span<const double> x, std::span<double> y) noexcept {
  std::size_t i = 0;
#if defined(IDM_HAVE_LIBMVEC)
  if (kAvx2) i = exp4(x.data(), y.data(), x.size());
#endif
  for (; i < x.size(); ++i) y[i] = std::exp(x[i]);
}

void erfc_batch(std::span<const double> x, std::span<double> y) noexcept {
  std::size_t i = 0;
#if defined(IDM_HAVE_LIBMVEC)
  if (kAvx2) i = erfc4(x.data(), y.data(), x.size());
#endif
  for (; i < x.size(); ++i) y[i] = std::erfc(x[i]);
}

}  // namespace idm
