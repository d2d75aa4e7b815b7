#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace sgdm {

/// Philox4x32-10 block function (Salmon et al. counter-based generator).
/// Pure: maps a 128-bit counter and a 64-bit key to 128 random bits.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// Deterministic random stream addressed by (seed, stream id).
///
/// The seed is the Philox key; the stream id occupies the upper half of the
/// counter and the lower half counts blocks, so any (seed, id) pair can be
/// opened directly without skipping through other streams. Normals use the
/// Box-Muller transform, pairing consecutive uniforms.
class RngStream {
 public:
  static constexpr const char* kAlgorithm = "philox4x32-10+box-muller";

  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1].
  double uniform_open_low() noexcept;
  /// Standard normal.
  double normal() noexcept;
  /// Uniform integer in [0, n); n must be >= 1. Unbiased (Lemire rejection).
  std::uint64_t below(std::uint64_t n) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Independent stream keyed by the same seed; pure function of (this id, child id).
  RngStream child(std::uint64_t child_id) const noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Stream ids reserved for the library's own consumers.
namespace streams {
inline constexpr std::uint64_t kProblem = 0x5052'4f42'0000'0000ull;   // "PROB"
inline constexpr std::uint64_t kSampling = 0x5341'4d50'0000'0000ull;  // "SAMP"
inline constexpr std::uint64_t kConfigs = 0x4346'4753'0000'0000ull;   // "CFGS"
}  // namespace streams

std::vector<double> normal_vector(RngStream& stream, std::size_t dim);
void fill_normal(RngStream& stream, std::span<double> out) noexcept;

std::vector<std::uint32_t> batch_indices(RngStream& stream, std::uint32_t n_samples,
                                         std::size_t batch_size);
void fill_batch_indices(RngStream& stream, std::uint32_t n_samples,
                        std::span<std::uint32_t> out) noexcept;

}  // namespace sgdm
