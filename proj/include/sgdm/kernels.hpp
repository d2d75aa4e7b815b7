#pragma once

// Data-parallel inner loops of the mini-batch gradient oracles.
//
// Every kernel has a portable scalar reference and, on x86-64, an AVX2/FMA
// variant compiled in its own translation unit. The variant is chosen once at
// runtime from CPUID; SGDM_FORCE_SCALAR=1 in the environment pins the scalar
// path. gather_sum is bit-identical across variants (per-lane addition order
// matches the scalar loop); the dot-product based kernels agree to rounding.

#include <cstddef>
#include <cstdint>
#include <span>

namespace sgdm::kernels {

enum class Isa { Scalar, Avx2 };

const char* to_string(Isa isa) noexcept;
bool cpu_supports(Isa isa) noexcept;
Isa best_available() noexcept;
Isa active() noexcept;
/// Throws InvalidInput if the CPU (or build) lacks `isa`.
void set_active(Isa isa);

/// out[k] = sum over i in `indices` (in order) of bank[i * stride + k], k < width.
void gather_sum(const double* bank, std::size_t stride, std::size_t width,
                std::span<const std::uint32_t> indices, double* out) noexcept;

/// out = sum over i in `indices` of (sigmoid(a_i . x) - label_i) a_i,
/// with a_i = features[i * dim .. i * dim + dim).
void logistic_gradient_sum(const double* features, const double* labels, std::size_t dim,
                           std::span<const std::uint32_t> indices, const double* x,
                           double* out) noexcept;

double dot(const double* a, const double* b, std::size_t n) noexcept;

/// Numerically stable logistic function.
double sigmoid(double s) noexcept;

namespace scalar {
void gather_sum(const double* bank, std::size_t stride, std::size_t width,
                std::span<const std::uint32_t> indices, double* out) noexcept;
void logistic_gradient_sum(const double* features, const double* labels, std::size_t dim,
                           std::span<const std::uint32_t> indices, const double* x,
                           double* out) noexcept;
double dot(const double* a, const double* b, std::size_t n) noexcept;
}  // namespace scalar

namespace avx2 {
void gather_sum(const double* bank, std::size_t stride, std::size_t width,
                std::span<const std::uint32_t> indices, double* out) noexcept;
void logistic_gradient_sum(const double* features, const double* labels, std::size_t dim,
                           std::span<const std::uint32_t> indices, const double* x,
                           double* out) noexcept;
double dot(const double* a, const double* b, std::size_t n) noexcept;
}  // namespace avx2

}  // namespace sgdm::kernels
