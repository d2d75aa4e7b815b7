// Compiled with -mavx2 -mfma. Must not include Eigen: its inline functions
// would be instantiated with a different ISA than the rest of the library.

#include <immintrin.h>

#include <algorithm>

#include "sgdm/kernels.hpp"

namespace sgdm::kernels::avx2 {

namespace {

constexpr std::size_t kTileRows = 16;

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline void prefetch_rows(const double* bank, std::size_t stride, std::size_t width,
                          const std::uint32_t* idx, std::size_t count) {
  const std::size_t bytes = width * sizeof(double);
  for (std::size_t r = 0; r < count; ++r) {
    const char* row = reinterpret_cast<const char*>(bank + static_cast<std::size_t>(idx[r]) * stride);
    for (std::size_t off = 0; off < bytes; off += 64) _mm_prefetch(row + off, _MM_HINT_T0);
  }
}

}  // namespace

void gather_sum(const double* bank, std::size_t stride, std::size_t width,
                std::span<const std::uint32_t> indices, double* out) noexcept {
  std::fill(out, out + width, 0.0);
  const std::size_t n = indices.size();
  const std::uint32_t* idx = indices.data();

  for (std::size_t t0 = 0; t0 < n; t0 += kTileRows) {
    const std::size_t t1 = std::min(n, t0 + kTileRows);
    if (t1 < n) prefetch_rows(bank, stride, width, idx + t1, std::min(kTileRows, n - t1));

    std::size_t k = 0;
    for (; k + 32 <= width; k += 32) {
      __m256d a0 = _mm256_loadu_pd(out + k);
      __m256d a1 = _mm256_loadu_pd(out + k + 4);
      __m256d a2 = _mm256_loadu_pd(out + k + 8);
      __m256d a3 = _mm256_loadu_pd(out + k + 12);
      __m256d a4 = _mm256_loadu_pd(out + k + 16);
      __m256d a5 = _mm256_loadu_pd(out + k + 20);
      __m256d a6 = _mm256_loadu_pd(out + k + 24);
      __m256d a7 = _mm256_loadu_pd(out + k + 28);
      for (std::size_t r = t0; r < t1; ++r) {
        const double* row = bank + static_cast<std::size_t>(idx[r]) * stride + k;
        a0 = _mm256_add_pd(a0, _mm256_loadu_pd(row));
        a1 = _mm256_add_pd(a1, _mm256_loadu_pd(row + 4));
        a2 = _mm256_add_pd(a2, _mm256_loadu_pd(row + 8));
        a3 = _mm256_add_pd(a3, _mm256_loadu_pd(row + 12));
        a4 = _mm256_add_pd(a4, _mm256_loadu_pd(row + 16));
        a5 = _mm256_add_pd(a5, _mm256_loadu_pd(row + 20));
        a6 = _mm256_add_pd(a6, _mm256_loadu_pd(row + 24));
        a7 = _mm256_add_pd(a7, _mm256_loadu_pd(row + 28));
      }
      _mm256_storeu_pd(out + k, a0);
      _mm256_storeu_pd(out + k + 4, a1);
      _mm256_storeu_pd(out + k + 8, a2);
      _mm256_storeu_pd(out + k + 12, a3);
      _mm256_storeu_pd(out + k + 16, a4);
      _mm256_storeu_pd(out + k + 20, a5);
      _mm256_storeu_pd(out + k + 24, a6);
      _mm256_storeu_pd(out + k + 28, a7);
    }
    for (; k + 4 <= width; k += 4) {
      __m256d a = _mm256_loadu_pd(out + k);
      for (std::size_t r = t0; r < t1; ++r)
        a = _mm256_add_pd(a, _mm256_loadu_pd(bank + static_cast<std::size_t>(idx[r]) * stride + k));
      _mm256_storeu_pd(out + k, a);
    }
    for (; k < width; ++k) {
      double a = out[k];
      for (std::size_t r = t0; r < t1; ++r) a += bank[static_cast<std::size_t>(idx[r]) * stride + k];
      out[k] = a;
    }
  }
}

double dot(const double* a, const double* b, std::size_t n) noexcept {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc);
  double s = hsum(acc);
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

void logistic_gradient_sum(const double* features, const double* labels, std::size_t dim,
                           std::span<const std::uint32_t> indices, const double* x,
                           double* out) noexcept {
  std::fill(out, out + dim, 0.0);
  for (const std::uint32_t i : indices) {
    const double* a = features + static_cast<std::size_t>(i) * dim;
    const double r = sigmoid(dot(a, x, dim)) - labels[i];
    const __m256d rv = _mm256_set1_pd(r);
    std::size_t k = 0;
    for (; k + 4 <= dim; k += 4)
      _mm256_storeu_pd(out + k, _mm256_fmadd_pd(rv, _mm256_loadu_pd(a + k), _mm256_loadu_pd(out + k)));
    for (; k < dim; ++k) out[k] += r * a[k];
  }
}

}  // namespace sgdm::kernels::avx2
