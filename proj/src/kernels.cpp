#include "sgdm/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "sgdm/error.hpp"

namespace sgdm::kernels {

#ifndef SGDM_HAVE_AVX2
namespace avx2 {
// Never selected: cpu_supports(Avx2) is false in builds without the AVX2 unit.
void gather_sum(const double* bank, std::size_t stride, std::size_t width,
                std::span<const std::uint32_t> indices, double* out) noexcept {
  scalar::gather_sum(bank, stride, width, indices, out);
}
void logistic_gradient_sum(const double* features, const double* labels, std::size_t dim,
                           std::span<const std::uint32_t> indices, const double* x,
                           double* out) noexcept {
  scalar::logistic_gradient_sum(features, labels, dim, indices, x, out);
}
double dot(const double* a, const double* b, std::size_t n) noexcept {
  return scalar::dot(a, b, n);
}
}  // namespace avx2
#endif

namespace {

Isa initial_isa() noexcept {
  const char* force = std::getenv("SGDM_FORCE_SCALAR");
  if (force != nullptr && std::strcmp(force, "0") != 0 && force[0] != '\0') return Isa::Scalar;
  return best_available();
}

std::atomic<Isa>& active_slot() noexcept {
  static std::atomic<Isa> slot{initial_isa()};
  return slot;
}

}  // namespace

const char* to_string(Isa isa) noexcept { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool cpu_supports(Isa isa) noexcept {
  if (isa == Isa::Scalar) return true;
#if defined(SGDM_HAVE_AVX2)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa best_available() noexcept { return cpu_supports(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar; }

Isa active() noexcept { return active_slot().load(std::memory_order_relaxed); }

void set_active(Isa isa) {
  if (!cpu_supports(isa)) throw InvalidInput(std::string("ISA not available: ") + to_string(isa));
  active_slot().store(isa, std::memory_order_relaxed);
}

void gather_sum(const double* bank, std::size_t stride, std::size_t width,
                std::span<const std::uint32_t> indices, double* out) noexcept {
  if (active() == Isa::Avx2) return avx2::gather_sum(bank, stride, width, indices, out);
  scalar::gather_sum(bank, stride, width, indices, out);
}

void logistic_gradient_sum(const double* features, const double* labels, std::size_t dim,
                           std::span<const std::uint32_t> indices, const double* x,
                           double* out) noexcept {
  if (active() == Isa::Avx2)
    return avx2::logistic_gradient_sum(features, labels, dim, indices, x, out);
  scalar::logistic_gradient_sum(features, labels, dim, indices, x, out);
}

double dot(const double* a, const double* b, std::size_t n) noexcept {
  if (active() == Isa::Avx2) return avx2::dot(a, b, n);
  return scalar::dot(a, b, n);
}

}  // namespace sgdm::kernels
