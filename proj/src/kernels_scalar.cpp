#include <cmath>

#include "sgdm/kernels.hpp"

namespace sgdm::kernels {

double sigmoid(double s) noexcept {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

namespace scalar {

void gather_sum(const double* bank, std::size_t stride, std::size_t width,
                std::span<const std::uint32_t> indices, double* out) noexcept {
  for (std::size_t k = 0; k < width; ++k) out[k] = 0.0;
  for (const std::uint32_t i : indices) {
    const double* row = bank + static_cast<std::size_t>(i) * stride;
    for (std::size_t k = 0; k < width; ++k) out[k] += row[k];
  }
}

double dot(const double* a, const double* b, std::size_t n) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

void logistic_gradient_sum(const double* features, const double* labels, std::size_t dim,
                           std::span<const std::uint32_t> indices, const double* x,
                           double* out) noexcept {
  for (std::size_t k = 0; k < dim; ++k) out[k] = 0.0;
  for (const std::uint32_t i : indices) {
    const double* a = features + static_cast<std::size_t>(i) * dim;
    const double r = sigmoid(dot(a, x, dim)) - labels[i];
    for (std::size_t k = 0; k < dim; ++k) out[k] += r * a[k];
  }
}

}  // namespace scalar
}  // namespace sgdm::kernels
